/** Average pooling over the time axis of a [frames x dim] hidden-state stack. */

export function meanOverTime(frames: Float32Array[], dim: number): Float32Array {
  if (frames.length === 0) throw new Error("cannot pool zero frames");
  const out = new Float32Array(dim);
  for (const frame of frames) {
    if (frame.length !== dim) {
      throw new Error(`frame length ${frame.length} does not match dim ${dim}`);
    }
    for (let i = 0; i < dim; i++) out[i] += frame[i];
  }
  for (let i = 0; i < dim; i++) out[i] /= frames.length;
  return out;
}
