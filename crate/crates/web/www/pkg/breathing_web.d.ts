/* tslint:disable */
/* eslint-disable */

/**
 * ⟨X̂²⟩(t) with its spectrum and fitted peaks.
 */
export class SignalAnalysis {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly cm: number | undefined;
    readonly magnitude: Float64Array;
    /**
     * frequency axis in units of Ω_post
     */
    readonly omega: Float64Array;
    /**
     * (centre, amplitude, sigma) triples, strongest first
     */
    readonly peaks: Float64Array;
    readonly relative: number | undefined;
    readonly t: Float64Array;
    readonly x2: Float64Array;
}

export function analyze_signal(g: number, omega_pre: number, omega_post: number, periods: number, max_quanta: number): SignalAnalysis;

/**
 * Band lines flattened as (frequency, is_cm, upper, lower) quadruples.
 */
export function band_lines(g: number, omega_pre: number, omega_post: number, max_quanta: number): Float64Array;

/**
 * Relative breathing frequency 2 − Δ₂,₀(g) for each coupling in `g`.
 */
export function relative_curve(g: Float64Array, omega_pre: number, omega_post: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_signalanalysis_free: (a: number, b: number) => void;
    readonly analyze_signal: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly band_lines: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly relative_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly signalanalysis_cm: (a: number) => [number, number];
    readonly signalanalysis_magnitude: (a: number) => [number, number];
    readonly signalanalysis_omega: (a: number) => [number, number];
    readonly signalanalysis_peaks: (a: number) => [number, number];
    readonly signalanalysis_relative: (a: number) => [number, number];
    readonly signalanalysis_t: (a: number) => [number, number];
    readonly signalanalysis_x2: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
