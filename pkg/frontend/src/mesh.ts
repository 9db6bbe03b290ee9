/** Transforms of the mesh payload into render-ready buffers.
 *
 * These are pure functions: the actual WebGL/canvas layer consumes their
 * output, and contract tests can run them headless.
 */
import { Certificate, MeshPayload, WellPart } from "./types.js";

export interface RenderBuffers {
  positions: Float32Array;      // 9 floats per triangle
  faceOfTriangle: Int32Array;   // face id per triangle, for picking
  faceIds: number[];            // distinct face ids, sorted
}

export function buildBuffers(mesh: MeshPayload): RenderBuffers {
  const positions = new Float32Array(mesh.triangles.length * 9);
  const faceOfTriangle = new Int32Array(mesh.triangles.length);
  mesh.triangles.forEach((tri, k) => {
    tri.forEach((vi, c) => {
      const v = mesh.vertices[vi];
      positions.set(v, k * 9 + c * 3);
    });
    faceOfTriangle[k] = mesh.face_ids[k];
  });
  const faceIds = [...new Set(mesh.face_ids)].sort((a, b) => a - b);
  return { positions, faceOfTriangle, faceIds };
}

export function pickFace(buffers: RenderBuffers, triangleIndex: number): number {
  if (triangleIndex < 0 || triangleIndex >= buffers.faceOfTriangle.length) {
    throw new RangeError(`no triangle ${triangleIndex}`);
  }
  return buffers.faceOfTriangle[triangleIndex];
}

export type FaceTint = "plain" | "over" | "under-part";

/** Face coloring mirrors the server diagnostics verbatim: faces referenced
 * by an over-constraint certificate tint one way, faces belonging to a
 * maximal well-constrained part another. */
export function constraintTints(
  faceIds: number[],
  certificates: Certificate[],
  parts: WellPart[],
  constraintRefs: Map<number, number[]>,
): Map<number, FaceTint> {
  const tint = new Map<number, FaceTint>();
  faceIds.forEach((f) => tint.set(f, "plain"));
  if (parts.length > 1) {
    for (const part of parts) {
      for (const f of part.entities) {
        if (tint.has(f)) tint.set(f, "under-part");
      }
    }
  }
  for (const cert of certificates) {
    for (const cid of cert.support) {
      for (const f of constraintRefs.get(cid) ?? []) {
        if (tint.has(f)) tint.set(f, "over");
      }
    }
  }
  return tint;
}
