/* tslint:disable */
/* eslint-disable */

/**
 * A control sequence with its final fidelity.
 */
export class Found {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly fidelity: number;
    readonly sequence: string;
}

/**
 * One learner on the default task, trained a batch of episodes at a time.
 */
export class Trainer {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Current greedy policy rolled out from the initial state.
     */
    greedy(): Found;
    constructor(kind: string, seed: number);
    /**
     * Runs `episodes` more episodes and returns each one's best fidelity.
     */
    train(episodes: number): Float64Array;
    readonly episodes: number;
}

/**
 * Best sequence of at most `horizon` steps found by the oracle search.
 */
export function oracle(horizon: number, beam: number): Found;

/**
 * Bloch vector of the target state as `[x, y, z]`.
 */
export function target_bloch(): Float64Array;

/**
 * Applies a sequence from the initial state. Flat `[x, y, z, fidelity]` per
 * step, starting with the initial state itself.
 */
export function trajectory(sequence: string): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_found_free: (a: number, b: number) => void;
    readonly __wbg_trainer_free: (a: number, b: number) => void;
    readonly found_fidelity: (a: number) => number;
    readonly found_sequence: (a: number) => [number, number];
    readonly oracle: (a: number, b: number) => [number, number, number];
    readonly target_bloch: () => [number, number];
    readonly trainer_episodes: (a: number) => number;
    readonly trainer_greedy: (a: number) => [number, number, number];
    readonly trainer_new: (a: number, b: number, c: number) => [number, number, number];
    readonly trainer_train: (a: number, b: number) => [number, number, number, number];
    readonly trajectory: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
