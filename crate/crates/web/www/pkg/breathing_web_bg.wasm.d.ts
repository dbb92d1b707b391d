/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_signalanalysis_free: (a: number, b: number) => void;
export const analyze_signal: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const band_lines: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const relative_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const signalanalysis_cm: (a: number) => [number, number];
export const signalanalysis_magnitude: (a: number) => [number, number];
export const signalanalysis_omega: (a: number) => [number, number];
export const signalanalysis_peaks: (a: number) => [number, number];
export const signalanalysis_relative: (a: number) => [number, number];
export const signalanalysis_t: (a: number) => [number, number];
export const signalanalysis_x2: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
