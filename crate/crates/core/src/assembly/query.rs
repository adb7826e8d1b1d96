//! Query-point identification, the oriented-bounding-box broadcast, and the
//! packed query exchange.

use super::{QueryKind, QueryPoint};
use crate::comm::{route, Packet};
use crate::geometry::{build_obb, obb_intersect, point_in_obb, OrientedBoundingBox};
use crate::math::Vec3;
use crate::mesh::NodeClass;
use crate::solver::World;
use crate::Result;
use rayon::prelude::*;

/// One rank's OBB for its slice of one block, in world coordinates.
#[derive(Debug, Clone, Copy)]
pub struct RankBlockObb {
    pub rank: usize,
    pub block: usize,
    pub obb: OrientedBoundingBox,
}

/// A query point on the wire: world position plus the slot in the source
/// rank's query list.
#[derive(Debug, Clone, Copy)]
pub struct QueryWire {
    pub slot: u32,
    pub pos: Vec3,
}

/// Result of the exchange phase: every rank's inbound query packets plus the
/// communication-map bookkeeping.
#[derive(Debug, Default)]
pub struct ExchangeResult {
    /// Per destination rank: (src rank, src block, queries).
    pub inbound: Vec<Vec<(usize, usize, Vec<QueryWire>)>>,
    pub packed_messages: usize,
    pub unpacked_tuples: usize,
    pub comm_map: Vec<(usize, usize, usize, usize)>,
}

/// Collect every rank's query points (sorted by block then row) and build the
/// per-(rank, block) OBBs that every rank shares.
pub fn identify_query_points(
    world: &World,
) -> Result<(Vec<Vec<QueryPoint>>, Vec<RankBlockObb>)> {
    let blocks = &world.blocks;
    let frames = &world.frames;
    let blanks = &world.blanks;
    let decomp = &world.decomp;

    let queries: Vec<Vec<QueryPoint>> = world
        .ranks
        .par_iter()
        .map(|rd| {
            let mut list = Vec::new();
            for (bi, slab) in rd.slabs.iter().enumerate() {
                if slab.is_empty() {
                    continue;
                }
                let frame = &frames[blocks[bi].frame_id];
                let [ri, rj, rk] = slab.owned();
                for k in rk.clone() {
                    for j in rj.clone() {
                        for i in ri.clone() {
                            let a = slab.aidx(i, j, k);
                            let kind = match slab.mask[a] {
                                NodeClass::Interface => QueryKind::GridInterface,
                                NodeClass::BlankBuffer => QueryKind::BlankBuffer {
                                    donor: blanks
                                        .get(slab.blank_src[a] as usize)
                                        .map(|r| r.donor_block as u16)
                                        .unwrap_or(0),
                                },
                                NodeClass::NearWallBuffer => QueryKind::NearWallBlank {
                                    donor: blanks
                                        .get(slab.blank_src[a] as usize)
                                        .map(|r| r.donor_block as u16)
                                        .unwrap_or(0),
                                },
                                _ => continue,
                            };
                            let bc = slab.block_of_array([i, j, k]);
                            let cell = [bc[0] as usize, bc[1] as usize, bc[2] as usize];
                            let row = decomp
                                .global_index(rd.rank, bi, cell)
                                .expect("query cell must be owned");
                            list.push(QueryPoint {
                                block: bi,
                                cell,
                                kind,
                                pos: frame.world_from_frame(slab.center(i, j, k)),
                                row,
                            });
                        }
                    }
                }
            }
            list.sort_by_key(|q| (q.block, q.row));
            list
        })
        .collect();

    let mut obbs = Vec::new();
    for rd in &world.ranks {
        for (bi, slab) in rd.slabs.iter().enumerate() {
            if slab.is_empty() || slab.control.is_none() {
                continue;
            }
            let frame = &frames[blocks[bi].frame_id];
            let shell = slab.boundary_shell_world(frame);
            obbs.push(RankBlockObb { rank: rd.rank, block: bi, obb: build_obb(&shell) });
        }
    }
    Ok((queries, obbs))
}

/// Build the communication map from OBB intersections, filter each query by
/// the point-in-OBB test, pack per (source block, destination rank), and
/// deliver. Self-delivery is local and not counted as a message.
pub fn pack_and_exchange(
    world: &mut World,
    queries: &[Vec<QueryPoint>],
    obbs: &[RankBlockObb],
) -> Result<ExchangeResult> {
    let nranks = world.nranks();
    let nblocks = world.nblocks();
    let obb_of = |rank: usize, block: usize| -> Option<&OrientedBoundingBox> {
        obbs.iter().find(|o| o.rank == rank && o.block == block).map(|o| &o.obb)
    };

    // the unpacked-scheme cost: one tuple per unordered block pair and ordered
    // rank pair whose boxes intersect
    let mut unpacked = 0;
    for bi in 0..nblocks {
        for sb in bi + 1..nblocks {
            for src in 0..nranks {
                for dst in 0..nranks {
                    if src == dst {
                        continue;
                    }
                    let hit = match (obb_of(src, bi), obb_of(dst, sb)) {
                        (Some(a), Some(b)) => obb_intersect(a, b),
                        _ => false,
                    } || match (obb_of(src, sb), obb_of(dst, bi)) {
                        (Some(a), Some(b)) => obb_intersect(a, b),
                        _ => false,
                    };
                    if hit {
                        unpacked += 1;
                    }
                }
            }
        }
    }

    // packed query sets: per (src, dst, src block), a query goes if it lies in
    // any of dst's other-block boxes
    let mut outgoing: Vec<Packet<Vec<QueryWire>>> = Vec::new();
    let mut comm_map = Vec::new();
    let mut packed = 0;
    for (src, qlist) in queries.iter().enumerate() {
        for dst in 0..nranks {
            // candidate donor blocks on dst whose OBB intersects any of src's
            let mut wires_per_block: Vec<Vec<QueryWire>> = vec![Vec::new(); nblocks];
            for (slot, q) in qlist.iter().enumerate() {
                let mut send = false;
                for sb in 0..nblocks {
                    if sb == q.block {
                        continue;
                    }
                    if let (Some(a), Some(b)) = (obb_of(src, q.block), obb_of(dst, sb)) {
                        if obb_intersect(a, b) && point_in_obb(q.pos, b) {
                            send = true;
                            break;
                        }
                    } else if let Some(b) = obb_of(dst, sb) {
                        // empty source slab still owns queries? it cannot,
                        // but keep the point filter as the authority
                        if point_in_obb(q.pos, b) {
                            send = true;
                            break;
                        }
                    }
                }
                if send {
                    wires_per_block[q.block].push(QueryWire { slot: slot as u32, pos: q.pos });
                }
            }
            for (bi, wires) in wires_per_block.into_iter().enumerate() {
                if wires.is_empty() {
                    continue;
                }
                if src != dst {
                    packed += 1;
                }
                comm_map.push((src, dst, bi, wires.len()));
                outgoing.push(Packet { src, dst, block: bi, payload: wires });
            }
        }
    }

    let inboxes = route(nranks, outgoing)?;
    let inbound = inboxes
        .into_iter()
        .map(|inbox| inbox.into_iter().map(|p| (p.src, p.block, p.payload)).collect())
        .collect();
    Ok(ExchangeResult { inbound, packed_messages: packed, unpacked_tuples: unpacked, comm_map })
}
