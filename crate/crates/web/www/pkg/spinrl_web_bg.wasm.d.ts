/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_found_free: (a: number, b: number) => void;
export const __wbg_trainer_free: (a: number, b: number) => void;
export const found_fidelity: (a: number) => number;
export const found_sequence: (a: number) => [number, number];
export const oracle: (a: number, b: number) => [number, number, number];
export const target_bloch: () => [number, number];
export const trainer_episodes: (a: number) => number;
export const trainer_greedy: (a: number) => [number, number, number];
export const trainer_new: (a: number, b: number, c: number) => [number, number, number];
export const trainer_train: (a: number, b: number) => [number, number, number, number];
export const trajectory: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
