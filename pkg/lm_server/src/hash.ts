/**
 * Integer hashing shared with the fixture oracle: FNV-1a 64 with a
 * splitmix64 finalizer. Everything runs on BigInt masked to 64 bits so
 * replies are bit-identical to the Python side; floats are derived from
 * the top 53 bits only, which every IEEE double represents exactly.
 */

const MASK64 = (1n << 64n) - 1n;
const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;

// Unit separator; also the token joiner for query strings.
export const UNIT_SEP = "\x1f";

const encoder = new TextEncoder();

export function fnv1a64(data: Uint8Array): bigint {
  let h = FNV_OFFSET;
  for (const byte of data) {
    h ^= BigInt(byte);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

/** splitmix64 finalizer on a 64-bit integer. */
export function mix64(x: bigint): bigint {
  x &= MASK64;
  x ^= x >> 30n;
  x = (x * 0xbf58476d1ce4e5b9n) & MASK64;
  x ^= x >> 27n;
  x = (x * 0x94d049bb133111ebn) & MASK64;
  x ^= x >> 31n;
  return x;
}

/** Hash a sequence of parts joined with the unit separator. */
export function hashParts(...parts: Array<string | number>): bigint {
  const joined = parts.map(String).join(UNIT_SEP);
  return mix64(fnv1a64(encoder.encode(joined)));
}

/** Top 53 bits of a 64-bit hash mapped to [0, 1). */
export function unitFloat(x: bigint): number {
  return Number(x >> 11n) / 2 ** 53;
}
