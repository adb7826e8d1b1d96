//! The distributed sparse interpolation operator in compressed row layout:
//! rows are query points (by receiver global index), columns donor solution
//! points (by global index), eight entries per found row. Application is a
//! gather of remote column values followed by row-wise weighted sums.

use super::corner_weights;
use crate::assembly::DonorStatus;
use crate::comm::{route, Packet};
use crate::solver::{RankData, World};
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// One rank's rows plus its gather plan.
#[derive(Debug, Default, Clone)]
pub struct RankMatrix {
    pub nrows: usize,
    pub found: Vec<bool>,
    /// Global column indices per row.
    pub cols: Vec<[usize; 8]>,
    /// Positions in the gathered value array per row.
    pub slots: Vec<[u32; 8]>,
    pub weights: Vec<[f64; 8]>,
    pub donor_block: Vec<u16>,
    /// Receiver (block, cell array index) per row.
    pub target: Vec<(u16, u32)>,
    /// Receiver global index per row.
    pub rows: Vec<usize>,
    /// Gather requests: (owner rank, wanted global ids), owners ascending.
    pub requests: Vec<(usize, Vec<usize>)>,
    pub gather_len: usize,
}

/// Owner-side serve lists: per requester, the (block, cell index) pairs to
/// ship each application.
type ServeList = Vec<(usize, Vec<(u16, u32)>)>;

#[derive(Debug, Default)]
pub struct InterpMatrix {
    pub ranks: Vec<RankMatrix>,
    serve: Vec<ServeList>,
}

/// Build the interpolation operator from the current assembly and store it in
/// the world. Each rank inserts rows for its own query points.
pub fn assemble_matrix(world: &mut World) -> Result<()> {
    let assembly = world
        .assembly
        .as_ref()
        .ok_or_else(|| Error::Config("assemble_matrix before assembly".into()))?;
    let decomp = &world.decomp;
    let nranks = world.nranks();

    let mut ranks: Vec<RankMatrix> = Vec::with_capacity(nranks);
    for rank in 0..nranks {
        let queries = &assembly.queries[rank];
        let records = &assembly.records[rank];
        let mut m = RankMatrix {
            nrows: queries.len(),
            found: Vec::with_capacity(queries.len()),
            cols: Vec::with_capacity(queries.len()),
            slots: vec![[0; 8]; queries.len()],
            weights: Vec::with_capacity(queries.len()),
            donor_block: Vec::with_capacity(queries.len()),
            target: Vec::with_capacity(queries.len()),
            rows: Vec::with_capacity(queries.len()),
            requests: Vec::new(),
            gather_len: 0,
        };
        // wanted global ids grouped by owner, deterministically ordered
        let mut wanted: BTreeMap<usize, std::collections::BTreeSet<usize>> = BTreeMap::new();
        for (q, r) in queries.iter().zip(records) {
            m.rows.push(q.row);
            let slab = &world.ranks[rank].slabs[q.block];
            let a = slab
                .array_of_block([q.cell[0] as i64, q.cell[1] as i64, q.cell[2] as i64])
                .ok_or_else(|| Error::OutOfRange("query cell outside its slab".into()))?;
            m.target.push((q.block as u16, slab.aidx(a[0], a[1], a[2]) as u32));
            if r.status == DonorStatus::Orphan {
                m.found.push(false);
                m.cols.push([0; 8]);
                m.weights.push([0.0; 8]);
                m.donor_block.push(u16::MAX);
                continue;
            }
            let mut cols = [0usize; 8];
            for b in 0..8 {
                let off = [(b & 1) as i64, ((b >> 1) & 1) as i64, ((b >> 2) & 1) as i64];
                let cell = [
                    (r.base[0] + off[0]) as usize,
                    (r.base[1] + off[1]) as usize,
                    (r.base[2] + off[2]) as usize,
                ];
                let gid = decomp.global_index_of_cell(r.donor_block, cell).map_err(|_| {
                    Error::OutOfRange(format!(
                        "donor corner {cell:?} of block {} outside layout",
                        r.donor_block
                    ))
                })?;
                cols[b] = gid;
                wanted.entry(decomp.owner_rank(r.donor_block, cell)).or_default().insert(gid);
            }
            m.found.push(true);
            m.cols.push(cols);
            m.weights.push(corner_weights(r.coeffs));
            m.donor_block.push(r.donor_block as u16);
        }
        // freeze the gather order and map gid -> slot
        let mut slot_of: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
        let mut at = 0u32;
        for (owner, gids) in &wanted {
            let list: Vec<usize> = gids.iter().copied().collect();
            for &g in &list {
                slot_of.insert(g, at);
                at += 1;
            }
            m.requests.push((*owner, list));
        }
        m.gather_len = at as usize;
        for (row, found) in m.found.iter().enumerate() {
            if *found {
                for b in 0..8 {
                    m.slots[row][b] = slot_of[&m.cols[row][b]];
                }
            }
        }
        ranks.push(m);
    }

    // ship the request lists to the owners and decode into serve lists
    let mut outgoing: Vec<Packet<Vec<usize>>> = Vec::new();
    for (rank, m) in ranks.iter().enumerate() {
        for (owner, gids) in &m.requests {
            outgoing.push(Packet { src: rank, dst: *owner, block: 0, payload: gids.clone() });
        }
    }
    world.stats.comm.interp_messages += outgoing.iter().filter(|p| p.src != p.dst).count();
    let inboxes = route(nranks, outgoing)?;
    let mut serve: Vec<ServeList> = Vec::with_capacity(nranks);
    for (rank, inbox) in inboxes.into_iter().enumerate() {
        let mut lists: ServeList = Vec::new();
        for p in inbox {
            let mut refs = Vec::with_capacity(p.payload.len());
            for gid in p.payload {
                let (owner, block, cell) = decomp.decode(gid)?;
                debug_assert_eq!(owner, rank);
                let slab = &world.ranks[rank].slabs[block];
                let a = slab
                    .array_of_block([cell[0] as i64, cell[1] as i64, cell[2] as i64])
                    .ok_or_else(|| Error::OutOfRange(format!("gid {gid} not on owner")))?;
                refs.push((block as u16, slab.aidx(a[0], a[1], a[2]) as u32));
            }
            lists.push((p.src, refs));
        }
        serve.push(lists);
    }

    world.matrix = Some(InterpMatrix { ranks, serve });
    Ok(())
}

impl InterpMatrix {
    /// Apply the operator to a K-component cell field given by `f`. Returns
    /// per-rank row values (zero for orphan rows) and the number of gather
    /// messages exchanged.
    pub fn apply<const K: usize>(
        &self,
        world: &World,
        f: impl Fn(&RankData, usize, usize) -> [f64; K] + Sync,
    ) -> Result<(Vec<Vec<[f64; K]>>, usize)> {
        let nranks = world.nranks();
        // owners push values along the serve lists
        let mut outgoing: Vec<Packet<Vec<[f64; K]>>> = Vec::new();
        for (rank, lists) in self.serve.iter().enumerate() {
            let rd = &world.ranks[rank];
            for (dst, refs) in lists {
                let vals: Vec<[f64; K]> =
                    refs.iter().map(|&(bi, a)| f(rd, bi as usize, a as usize)).collect();
                outgoing.push(Packet { src: rank, dst: *dst, block: 0, payload: vals });
            }
        }
        let messages = outgoing.iter().filter(|p| p.src != p.dst).count();
        let inboxes = route(nranks, outgoing)?;

        let values: Vec<Vec<[f64; K]>> = self
            .ranks
            .par_iter()
            .zip(inboxes)
            .map(|(m, inbox)| {
                // inbox sorted by src = owner ascending, matching request order
                let mut gathered: Vec<[f64; K]> = Vec::with_capacity(m.gather_len);
                for p in inbox {
                    gathered.extend_from_slice(&p.payload);
                }
                debug_assert_eq!(gathered.len(), m.gather_len);
                let mut out = vec![[0.0; K]; m.nrows];
                for row in 0..m.nrows {
                    if !m.found[row] {
                        continue;
                    }
                    let mut acc = [0.0; K];
                    for b in 0..8 {
                        let v = gathered[m.slots[row][b] as usize];
                        let w = m.weights[row][b];
                        for c in 0..K {
                            acc[c] += w * v[c];
                        }
                    }
                    out[row] = acc;
                }
                out
            })
            .collect();
        Ok((values, messages))
    }

    /// Debug dump: one line per row, `row: (col, weight) x8`.
    pub fn dump(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::fmt::Write as _;
        let mut out = String::new();
        for m in &self.ranks {
            for row in 0..m.nrows {
                if !m.found[row] {
                    let _ = writeln!(out, "{} orphan", m.rows[row]);
                    continue;
                }
                let _ = write!(out, "{}:", m.rows[row]);
                for b in 0..8 {
                    let _ = write!(out, " ({}, {:.17e})", m.cols[row][b], m.weights[row][b]);
                }
                let _ = writeln!(out);
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}
