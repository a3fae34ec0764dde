/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const convergence: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
export const grid_modes: (a: number, b: number, c: number) => [number, number, number, number];
export const trim_costs: (a: number, b: number, c: bigint, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
