/**
 * The 13 supported frozen pre-trained models.
 *
 * `expectedDim` is authoritative: if a backend produces a vector of any other
 * length, extraction fails hard rather than writing a file that disagrees
 * with the published representation dimensions.
 */

export interface ExtractorSpec {
  /** token used in file names and CLI flags */
  ptmId: string;
  /** upstream repository identifier for the real-inference backend */
  modelSource: string;
  /** rate the audio must be resampled to before the forward pass */
  sampleRate: 16000 | 24000;
  expectedDim: number;
  /** speaker models natively emit one utterance-level vector */
  utteranceLevel: boolean;
  /** whisper's encoder sees a fixed window; longer audio is truncated */
  maxSeconds?: number;
}

const spec = (
  ptmId: string,
  modelSource: string,
  sampleRate: 16000 | 24000,
  expectedDim: number,
  extras: Partial<ExtractorSpec> = {},
): ExtractorSpec => ({ ptmId, modelSource, sampleRate, expectedDim, utteranceLevel: false, ...extras });

export const EXTRACTOR_SPECS: readonly ExtractorSpec[] = [
  spec("unispeech-sat", "microsoft/unispeech-sat-base", 16000, 768),
  spec("wav2vec2", "facebook/wav2vec2-base", 16000, 768),
  spec("wavlm", "microsoft/wavlm-base", 16000, 768),
  spec("xlsr", "facebook/wav2vec2-xls-r-300m", 16000, 1280),
  spec("whisper", "openai/whisper-base", 16000, 512, { maxSeconds: 30 }),
  spec("mms", "facebook/mms-1b", 16000, 1280),
  spec("xvector", "speechbrain/spkrec-xvect-voxceleb", 16000, 512, { utteranceLevel: true }),
  spec("ecapa", "speechbrain/spkrec-ecapa-voxceleb", 16000, 192, { utteranceLevel: true }),
  spec("music2vec-v1", "m-a-p/music2vec-v1", 16000, 768),
  spec("mert-v1-95m", "m-a-p/MERT-v1-95M", 24000, 768),
  spec("mert-v0-public", "m-a-p/MERT-v0-public", 16000, 768),
  spec("mert-v1-330m", "m-a-p/MERT-v1-330M", 24000, 1024),
  spec("mert-v0", "m-a-p/MERT-v0", 16000, 768),
];

export function specFor(ptmId: string): ExtractorSpec {
  const found = EXTRACTOR_SPECS.find((s) => s.ptmId === ptmId);
  if (!found) {
    const known = EXTRACTOR_SPECS.map((s) => s.ptmId).join(", ");
    throw new Error(`unknown ptm '${ptmId}' (supported: ${known})`);
  }
  return found;
}
