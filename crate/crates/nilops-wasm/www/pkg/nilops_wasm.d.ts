/* tslint:disable */
/* eslint-disable */

/**
 * Admissible form of a product of squares, e.g. `"2 2"` or `"Sq3 Sq2"`.
 */
export function adem(word: string): string;

/**
 * A sample module in the JSON format.
 */
export function example_module(name: string): string;

/**
 * The nil filtration, its layers and `Ω`, `Ω₁` of a module given as JSON.
 */
export function nil_filtration_report(module: string, smax: number): string;

/**
 * The realizability obstruction for a module given as JSON.
 */
export function obstruction_report(module: string, n: number, kmax: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly adem: (a: number, b: number) => [number, number, number, number];
    readonly example_module: (a: number, b: number) => [number, number, number, number];
    readonly nil_filtration_report: (a: number, b: number, c: number) => [number, number, number, number];
    readonly obstruction_report: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
