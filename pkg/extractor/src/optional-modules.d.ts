// Optional backend dependency, installed by the user when real inference is
// wanted; the import stays dynamic and failure is handled at runtime.
declare module "@xenova/transformers";
