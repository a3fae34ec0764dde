/* tslint:disable */
/* eslint-disable */

/**
 * Outer iteration history on a random graph.
 */
export function convergence(n: number, avg_degree: number, seed: bigint, count: number, inner_tol: number): string;

/**
 * Lowest vibration modes of a `rows x cols` grid.
 */
export function grid_modes(rows: number, cols: number, count: number): string;

/**
 * Solver cost under each trimming policy on one random graph.
 */
export function trim_costs(n: number, avg_degree: number, seed: bigint, count: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly convergence: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
    readonly grid_modes: (a: number, b: number, c: number) => [number, number, number, number];
    readonly trim_costs: (a: number, b: number, c: bigint, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
