//! Donor search: control-cell localization, the walking search guided by the
//! signs of the face distances, and the brute-force fallback.

use super::query::ExchangeResult;
use crate::comm::{route, Packet};
use crate::geometry::{locate_control_cell, trilinear_distances, ControlLocation};
use crate::mesh::Slab;
use crate::solver::World;
use crate::Result;
use rayon::prelude::*;

/// A donor candidate reported back to the query's owner rank.
#[derive(Debug, Clone, Copy)]
pub struct DonorCandidate {
    pub slot: u32,
    pub donor_rank: usize,
    pub donor_block: usize,
    pub base: [i64; 3],
    pub coeffs: [f64; 3],
    /// Every corner of the donor hex carries a usable value.
    pub usable: bool,
    /// Point actually inside the hex (false: nearest fallback for orphan
    /// tolerance).
    pub contained: bool,
    /// Distance quality of the nearest fallback (more negative is worse).
    pub quality: f64,
}

/// Search every inbound query against this rank's slice of every other block.
/// Returns per-rank candidate lists routed back to the query owners, and the
/// number of reply messages sent over the reversed map.
pub fn donor_search(
    world: &mut World,
    exchange: &ExchangeResult,
) -> Result<(Vec<Vec<DonorCandidate>>, usize)> {
    let blocks = &world.blocks;
    let frames = &world.frames;
    let nranks = world.nranks();

    let replies: Vec<Vec<Packet<Vec<DonorCandidate>>>> = world
        .ranks
        .par_iter()
        .map(|rd| {
            let mut out: Vec<Packet<Vec<DonorCandidate>>> = Vec::new();
            for &(src, qblock, ref wires) in &exchange.inbound[rd.rank] {
                let mut cands: Vec<DonorCandidate> = Vec::new();
                for (sb, slab) in rd.slabs.iter().enumerate() {
                    if sb == qblock || slab.control.is_none() {
                        continue;
                    }
                    let frame = &frames[blocks[sb].frame_id];
                    for w in wires {
                        let p = frame.frame_from_world(w.pos);
                        if let Some(c) = locate_donor(slab, &blocks[sb], p) {
                            cands.push(DonorCandidate {
                                slot: w.slot,
                                donor_rank: rd.rank,
                                donor_block: sb,
                                base: c.base,
                                coeffs: c.coeffs,
                                usable: c.usable,
                                contained: c.contained,
                                quality: c.quality,
                            });
                        }
                    }
                }
                if !cands.is_empty() || src != rd.rank {
                    out.push(Packet { src: rd.rank, dst: src, block: qblock, payload: cands });
                }
            }
            out
        })
        .collect();

    let mut outgoing = Vec::new();
    let mut reply_count = 0;
    for packets in replies {
        for p in packets {
            if p.payload.is_empty() {
                continue;
            }
            if p.src != p.dst {
                reply_count += 1;
            }
            outgoing.push(p);
        }
    }

    let inboxes = route(nranks, outgoing)?;
    let per_rank = inboxes
        .into_iter()
        .map(|inbox| inbox.into_iter().flat_map(|p| p.payload).collect())
        .collect();
    Ok((per_rank, reply_count))
}

struct Located {
    base: [i64; 3],
    coeffs: [f64; 3],
    usable: bool,
    contained: bool,
    quality: f64,
}

/// Walking search with brute-force fallback over the control cell. Also keeps
/// the nearest non-containing hex as a fallback candidate.
fn locate_donor(slab: &Slab, block: &crate::mesh::Block, p: crate::math::Vec3) -> Option<Located> {
    let control = slab.control.as_ref()?;
    let cc = match locate_control_cell(p, control) {
        ControlLocation::Cell(c) => c,
        ControlLocation::Outside => return None,
    };
    let candidates = control.candidates(cc);
    if candidates.is_empty() {
        return None;
    }
    let range = slab.donor_base_range(block);
    let span = [
        range[0].end - range[0].start,
        range[1].end - range[1].start,
        range[2].end - range[2].start,
    ];
    let max_steps = (4 * (span[0] + span[1] + span[2])).max(16) as usize;

    let mut base = slab.donor_base_of_id(block, candidates[0]);
    let mut prev: Option<[i64; 3]> = None;
    let mut stuck = false;
    for _ in 0..max_steps {
        let hex = match slab.donor_hex(base) {
            Some(h) => h,
            None => {
                stuck = true;
                break;
            }
        };
        let (d, diag) = match trilinear_distances(p, &hex) {
            Ok(v) => v,
            Err(_) => {
                stuck = true;
                break;
            }
        };
        let eps = 1e-10 * diag;
        if d.iter().all(|&v| v > -eps) {
            return Some(finish(slab, base, d, p));
        }
        // walking direction from the face-distance signs
        let mut step = [0i64; 3];
        for dir in 0..3 {
            let (dmax, dmin) = (d[2 * dir], d[2 * dir + 1]);
            if dmax < -eps && dmin > -eps {
                step[dir] = 1;
            } else if dmin < -eps && dmax > -eps {
                step[dir] = -1;
            }
        }
        let mut next = base;
        for dir in 0..3 {
            next[dir] = (base[dir] + step[dir]).clamp(range[dir].start, range[dir].end - 1);
        }
        if next == base || Some(next) == prev {
            stuck = true;
            break;
        }
        prev = Some(base);
        base = next;
    }
    let _ = stuck;

    // brute force over the control cell, tracking the nearest miss
    let mut nearest: Option<([i64; 3], [f64; 6], f64)> = None;
    for &id in candidates {
        let cand = slab.donor_base_of_id(block, id);
        let hex = match slab.donor_hex(cand) {
            Some(h) => h,
            None => continue,
        };
        let (d, diag) = match trilinear_distances(p, &hex) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let eps = 1e-10 * diag;
        let worst = d.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst > -eps {
            return Some(finish(slab, cand, d, p));
        }
        if nearest.as_ref().map_or(true, |(_, _, q)| worst > *q) {
            nearest = Some((cand, d, worst));
        }
    }
    nearest.map(|(cand, d, q)| {
        let mut loc = finish(slab, cand, d, p);
        loc.contained = false;
        loc.quality = q;
        for a in loc.coeffs.iter_mut() {
            *a = a.clamp(0.0, 1.0);
        }
        loc
    })
}

fn finish(slab: &Slab, base: [i64; 3], d: [f64; 6], _p: crate::math::Vec3) -> Located {
    let coeffs = crate::interp::trilinear_coefficients(&d).unwrap_or([0.5, 0.5, 0.5]);
    // corner usability from the node classification
    let mut usable = true;
    for b in 0..8 {
        let off = [(b & 1) as i64, ((b >> 1) & 1) as i64, ((b >> 2) & 1) as i64];
        let c = [base[0] + off[0], base[1] + off[1], base[2] + off[2]];
        if let Some(a) = slab.array_of_block(c) {
            if !slab.class(a[0], a[1], a[2]).has_value() {
                usable = false;
                break;
            }
        } else {
            usable = false;
            break;
        }
    }
    Located { base, coeffs, usable, contained: true, quality: 0.0 }
}
