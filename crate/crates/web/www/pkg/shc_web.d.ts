/* tslint:disable */
/* eslint-disable */

export class Demo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Accuracy index against the ground truth, NaN without labels.
     */
    accuracy(ids: Uint32Array): number;
    cluster(k: number, b: number, dissim: string, seed: number): Uint32Array;
    /**
     * The full result as JSON.
     */
    estimateK(b: number, seed: number): string;
    /**
     * CSV text; a column named `label` or `class` is taken as ground truth.
     */
    static fromCsv(text: string): Demo;
    /**
     * Built-in dataset: three_normals, spiral, half_ring, two_uniform_1d or blobs.
     */
    static generate(kind: string, seed: number): Demo;
    /**
     * Basal K-means ids followed by the ids after merging to `kb`.
     */
    hybrid(kl: number, kb: number, dissim: string, seed: number): Uint32Array;
    n(): number;
    name(): string;
    /**
     * Empty when the data carry no labels.
     */
    truth(): Uint32Array;
    xy(): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_accuracy: (a: number, b: number, c: number) => number;
    readonly demo_cluster: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly demo_estimateK: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_fromCsv: (a: number, b: number) => [number, number, number];
    readonly demo_generate: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_hybrid: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly demo_n: (a: number) => number;
    readonly demo_name: (a: number) => [number, number];
    readonly demo_truth: (a: number) => [number, number];
    readonly demo_xy: (a: number) => [number, number];
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
