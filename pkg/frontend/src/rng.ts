/**
 * xoshiro256** seeded via splitmix64.
 *
 * This mirrors the harness's generator bit for bit: the same seed yields
 * the same action stream in both implementations, which the tests pin
 * against shared reference vectors.
 */

const MASK64 = (1n << 64n) - 1n;

function splitmix64(state: bigint): [bigint, bigint] {
  state = (state + 0x9e3779b97f4a7c15n) & MASK64;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return [z ^ (z >> 31n), state];
}

function rotl(x: bigint, k: bigint): bigint {
  return ((x << k) | (x >> (64n - k))) & MASK64;
}

export class Xoshiro256StarStar {
  private s: [bigint, bigint, bigint, bigint];

  constructor(seed: bigint | number) {
    let sm = BigInt(seed) & MASK64;
    const state: bigint[] = [];
    for (let i = 0; i < 4; i++) {
      const [out, next] = splitmix64(sm);
      state.push(out);
      sm = next;
    }
    this.s = [state[0]!, state[1]!, state[2]!, state[3]!];
  }

  nextU64(): bigint {
    let [s0, s1, s2, s3] = this.s;
    const result = (rotl((s1 * 5n) & MASK64, 7n) * 9n) & MASK64;
    const t = (s1 << 17n) & MASK64;
    s2 ^= s0;
    s3 ^= s1;
    s1 ^= s2;
    s0 ^= s3;
    s2 ^= t;
    s3 = rotl(s3, 45n);
    this.s = [s0, s1, s2, s3];
    return result;
  }

  /** Uniform double in [0, 1) from the top 53 bits. */
  uniform(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  uniformVector(n: number): number[] {
    return Array.from({ length: n }, () => this.uniform());
  }
}
