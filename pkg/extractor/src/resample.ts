/**
 * Windowed-sinc resampling.
 *
 * Good enough for feature extraction: a Hann-windowed sinc kernel with 16
 * taps per side, low-passed to the output Nyquist when downsampling.
 */

const TAPS_PER_SIDE = 16;

function hann(x: number): number {
  // x in [-1, 1]
  return 0.5 * (1 + Math.cos(Math.PI * x));
}

function sinc(x: number): number {
  if (x === 0) return 1;
  const px = Math.PI * x;
  return Math.sin(px) / px;
}

export function resample(samples: Float32Array, fromRate: number, toRate: number): Float32Array {
  if (fromRate <= 0 || toRate <= 0) throw new Error(`invalid rates ${fromRate} -> ${toRate}`);
  if (fromRate === toRate) return samples;
  const ratio = toRate / fromRate;
  const cutoff = Math.min(1, ratio); // anti-alias when downsampling
  const outLength = Math.max(1, Math.round(samples.length * ratio));
  const out = new Float32Array(outLength);
  for (let i = 0; i < outLength; i++) {
    const centre = i / ratio;
    const first = Math.max(0, Math.floor(centre) - TAPS_PER_SIDE + 1);
    const last = Math.min(samples.length - 1, Math.floor(centre) + TAPS_PER_SIDE);
    let acc = 0;
    let norm = 0;
    for (let j = first; j <= last; j++) {
      const weight = sinc((centre - j) * cutoff) * cutoff * hann((centre - j) / TAPS_PER_SIDE);
      acc += samples[j] * weight;
      norm += weight;
    }
    out[i] = norm !== 0 ? acc / norm : 0; // normalised so DC passes exactly
  }
  return out;
}
