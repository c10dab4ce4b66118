/** Marching squares over a dense grid.
 *
 * Values come row-major (rows = y axis, columns = x axis); output
 * segments use fractional grid coordinates (x in [0, cols-1], y in
 * [0, rows-1]). Cells touching a null value are skipped, which is how
 * masked surface cells stay blank in the plot.
 */

export interface Point { x: number; y: number }
export type Segment = [Point, Point];

type Grid = (number | null)[][];

// edge ids within a cell
const B = 0, R = 1, T = 2, L = 3;

// segment table indexed by the 4-bit corner pattern
// bits: 1 = (y, x), 2 = (y, x+1), 4 = (y+1, x+1), 8 = (y+1, x)
const CASES: number[][][] = [
  [],                 // 0: all out
  [[L, B]],           // 1: bottom-left in
  [[B, R]],           // 2: bottom-right in
  [[L, R]],           // 3: bottom band
  [[R, T]],           // 4: top-right in
  [],                 // 5: saddle, resolved at runtime
  [[B, T]],           // 6: right band
  [[L, T]],           // 7: all but top-left
  [[T, L]],           // 8: top-left in
  [[B, T]],           // 9: left band
  [],                 // 10: saddle, resolved at runtime
  [[R, T]],           // 11: all but top-right
  [[L, R]],           // 12: top band
  [[B, R]],           // 13: all but bottom-right
  [[L, B]],           // 14: all but bottom-left
  [],                 // 15: all in
];

function interp(level: number, v0: number, v1: number): number {
  if (v0 === v1) return 0.5;
  return (level - v0) / (v1 - v0);
}

/** Trace one level; returns line segments in grid coordinates. */
export function traceLevel(values: Grid, level: number): Segment[] {
  const rows = values.length;
  const cols = rows > 0 ? values[0].length : 0;
  const out: Segment[] = [];
  for (let y = 0; y < rows - 1; y++) {
    for (let x = 0; x < cols - 1; x++) {
      const v00 = values[y][x], v10 = values[y][x + 1];
      const v11 = values[y + 1][x + 1], v01 = values[y + 1][x];
      if (v00 === null || v10 === null || v11 === null || v01 === null) {
        continue;
      }
      let idx = 0;
      if (v00 > level) idx |= 1;
      if (v10 > level) idx |= 2;
      if (v11 > level) idx |= 4;
      if (v01 > level) idx |= 8;
      if (idx === 0 || idx === 15) continue;

      const edgePoint = (e: number): Point => {
        switch (e) {
          case B: return { x: x + interp(level, v00, v10), y };
          case R: return { x: x + 1, y: y + interp(level, v10, v11) };
          case T: return { x: x + interp(level, v01, v11), y: y + 1 };
          default: return { x, y: y + interp(level, v00, v01) };
        }
      };

      let pairs = CASES[idx];
      if (idx === 5 || idx === 10) {
        // saddle: split by the cell-center value
        const center = (v00 + v10 + v11 + v01) / 4;
        const inside = center > level;
        pairs = idx === 5
          ? (inside ? [[B, R], [T, L]] : [[L, B], [R, T]])
          : (inside ? [[L, B], [R, T]] : [[B, R], [T, L]]);
      }
      for (const [a, b] of pairs) {
        out.push([edgePoint(a), edgePoint(b)]);
      }
    }
  }
  return out;
}

/** SVG path string for one traced level, coordinates mapped by fn. */
export function levelPath(segments: Segment[],
                          toPixel: (p: Point) => Point,
                          decimals = 2): string {
  const fmt = (v: number) => v.toFixed(decimals);
  return segments.map(([a, b]) => {
    const pa = toPixel(a), pb = toPixel(b);
    return `M${fmt(pa.x)} ${fmt(pa.y)}L${fmt(pb.x)} ${fmt(pb.y)}`;
  }).join("");
}
