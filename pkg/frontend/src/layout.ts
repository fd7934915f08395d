/** Deterministic force-directed layout.
 *
 * Plain Fruchterman-Reingold with a fixed iteration budget and a seeded
 * start, so the same graph always lands in the same place. Dragged nodes
 * are pinned: they contribute forces but never move. Layout is pure
 * presentation; it has no effect on any verdict.
 */

export interface Point {
  x: number;
  y: number;
}

export interface LayoutOptions {
  width?: number;
  height?: number;
  iterations?: number;
  /** Node id -> fixed position (drag override). */
  pinned?: Map<number, Point>;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function forceLayout(
  nodeIds: number[],
  edges: [number, number][],
  options: LayoutOptions = {},
): Map<number, Point> {
  const width = options.width ?? 640;
  const height = options.height ?? 420;
  const iterations = options.iterations ?? 250;
  const pinned = options.pinned ?? new Map<number, Point>();

  const n = nodeIds.length;
  const pos = new Map<number, Point>();
  if (n === 0) return pos;

  const rand = mulberry32(0x5eed + n);
  for (const id of nodeIds) {
    const fixed = pinned.get(id);
    pos.set(
      id,
      fixed
        ? { ...fixed }
        : {
            x: width * (0.2 + 0.6 * rand()),
            y: height * (0.2 + 0.6 * rand()),
          },
    );
  }
  if (n === 1) {
    const only = nodeIds[0];
    if (!pinned.has(only)) pos.set(only, { x: width / 2, y: height / 2 });
    return pos;
  }

  const k = Math.sqrt((width * height) / n); // ideal spring length
  let temperature = width / 8;
  const cool = temperature / iterations;

  for (let step = 0; step < iterations; step++) {
    const disp = new Map<number, Point>(nodeIds.map((id) => [id, { x: 0, y: 0 }]));

    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const a = pos.get(nodeIds[i])!;
        const b = pos.get(nodeIds[j])!;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let dist = Math.hypot(dx, dy);
        if (dist < 1e-6) {
          dx = 1e-3 * (i - j);
          dy = 1e-3;
          dist = Math.hypot(dx, dy);
        }
        const repel = (k * k) / dist;
        const da = disp.get(nodeIds[i])!;
        const db = disp.get(nodeIds[j])!;
        da.x += (dx / dist) * repel;
        da.y += (dy / dist) * repel;
        db.x -= (dx / dist) * repel;
        db.y -= (dy / dist) * repel;
      }
    }

    for (const [u, v] of edges) {
      const a = pos.get(u);
      const b = pos.get(v);
      if (!a || !b) continue;
      let dx = a.x - b.x;
      let dy = a.y - b.y;
      const dist = Math.max(Math.hypot(dx, dy), 1e-6);
      const attract = (dist * dist) / k;
      const du = disp.get(u)!;
      const dv = disp.get(v)!;
      du.x -= (dx / dist) * attract;
      du.y -= (dy / dist) * attract;
      dv.x += (dx / dist) * attract;
      dv.y += (dy / dist) * attract;
    }

    for (const id of nodeIds) {
      if (pinned.has(id)) continue;
      const p = pos.get(id)!;
      const d = disp.get(id)!;
      const mag = Math.max(Math.hypot(d.x, d.y), 1e-6);
      const stepLen = Math.min(mag, temperature);
      p.x += (d.x / mag) * stepLen;
      p.y += (d.y / mag) * stepLen;
      p.x = Math.min(width - 20, Math.max(20, p.x));
      p.y = Math.min(height - 20, Math.max(20, p.y));
    }
    temperature = Math.max(temperature - cool, 0.5);
  }

  return pos;
}
