//! Donor selection: designated donors for buffer queries, background priority
//! for interface queries, deterministic tie-breaks, and the orphan policy.

use super::search::DonorCandidate;
use super::{AssemblyResult, DonorRecord, DonorStatus, QueryKind, QueryPoint};
use crate::solver::World;
use crate::{Error, Result};

/// Choose one donor per query from the candidates gathered across ranks.
pub fn select_donors(
    world: &mut World,
    queries: Vec<Vec<QueryPoint>>,
    replies: Vec<Vec<DonorCandidate>>,
) -> Result<AssemblyResult> {
    let background = world.background;
    let decomp = &world.decomp;
    let tolerate = world.params.tolerate_orphans;

    let mut records: Vec<Vec<DonorRecord>> = Vec::with_capacity(queries.len());
    let mut orphans = 0usize;
    let mut tolerated = 0usize;
    let mut first_orphan: Option<(usize, QueryPoint)> = None;

    for (rank, qlist) in queries.iter().enumerate() {
        // bucket candidates by slot
        let mut per_slot: Vec<Vec<&DonorCandidate>> = vec![Vec::new(); qlist.len()];
        for c in &replies[rank] {
            if (c.slot as usize) < per_slot.len() {
                per_slot[c.slot as usize].push(c);
            }
        }
        let mut recs = Vec::with_capacity(qlist.len());
        for (slot, q) in qlist.iter().enumerate() {
            let cands = &per_slot[slot];
            let pick = choose(q, cands, background, decomp);
            match pick {
                Some(c) => recs.push(DonorRecord {
                    donor_rank: c.donor_rank,
                    donor_block: c.donor_block,
                    base: c.base,
                    coeffs: c.coeffs,
                    status: DonorStatus::Found,
                }),
                None => {
                    // nearest-donor fallback, for debugging runs only
                    let fallback = if tolerate {
                        best_fallback(q, cands, decomp)
                    } else {
                        None
                    };
                    match fallback {
                        Some(c) => {
                            tolerated += 1;
                            recs.push(DonorRecord {
                                donor_rank: c.donor_rank,
                                donor_block: c.donor_block,
                                base: c.base,
                                coeffs: c.coeffs,
                                status: DonorStatus::Found,
                            });
                        }
                        None => {
                            orphans += 1;
                            if first_orphan.is_none() {
                                first_orphan = Some((rank, *q));
                            }
                            recs.push(DonorRecord::orphan());
                        }
                    }
                }
            }
        }
        records.push(recs);
    }

    if orphans > 0 && !tolerate {
        let (_, q) = first_orphan.unwrap();
        return Err(Error::OrphanQuery {
            block: q.block,
            x: q.pos.x,
            y: q.pos.y,
            z: q.pos.z,
            kind: format!("{:?} ({orphans} orphans total)", q.kind),
        });
    }
    world.stats.orphans_tolerated += tolerated;

    Ok(AssemblyResult {
        queries,
        records,
        packed_messages: 0,
        reply_messages: 0,
        unpacked_tuples: 0,
        comm_map: Vec::new(),
        orphans,
    })
}

fn donor_gid(c: &DonorCandidate, decomp: &crate::mesh::Decomposition) -> usize {
    let cell = [c.base[0] as usize, c.base[1] as usize, c.base[2] as usize];
    decomp.global_index_of_cell(c.donor_block, cell).unwrap_or(usize::MAX)
}

/// Priority rules: buffer queries take their designated donor block; interface
/// queries prefer the background grid and fall back to other overset grids
/// when the background donor cell has a blanked corner. Ties break toward the
/// lowest block id, then the lowest donor global index.
fn choose<'a>(
    q: &QueryPoint,
    cands: &[&'a DonorCandidate],
    background: usize,
    decomp: &crate::mesh::Decomposition,
) -> Option<&'a DonorCandidate> {
    let usable = |c: &&&DonorCandidate| c.usable && c.contained;
    match q.kind {
        QueryKind::BlankBuffer { donor } | QueryKind::NearWallBlank { donor } => cands
            .iter()
            .filter(|c| c.donor_block == donor as usize)
            .filter(usable)
            .min_by_key(|c| donor_gid(c, decomp))
            .copied(),
        QueryKind::GridInterface => {
            let bg = cands
                .iter()
                .filter(|c| c.donor_block == background)
                .filter(usable)
                .min_by_key(|c| donor_gid(c, decomp))
                .copied();
            if bg.is_some() {
                return bg;
            }
            cands
                .iter()
                .filter(|c| c.donor_block != background)
                .filter(usable)
                .min_by_key(|c| (c.donor_block, donor_gid(c, decomp)))
                .copied()
        }
    }
}

/// Nearest usable candidate regardless of containment, clamped coefficients.
fn best_fallback<'a>(
    q: &QueryPoint,
    cands: &[&'a DonorCandidate],
    decomp: &crate::mesh::Decomposition,
) -> Option<&'a DonorCandidate> {
    let allowed = |c: &&&DonorCandidate| match q.kind.designated_donor() {
        Some(d) => c.donor_block == d,
        None => true,
    };
    cands
        .iter()
        .filter(allowed)
        .filter(|c| c.usable)
        .max_by(|a, b| {
            a.quality
                .partial_cmp(&b.quality)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| donor_gid(b, decomp).cmp(&donor_gid(a, decomp)))
        })
        .copied()
}
