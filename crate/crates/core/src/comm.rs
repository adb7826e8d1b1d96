//! In-process message passing between ranks.
//!
//! Ranks execute the same phases in lockstep; `route` plays the role of the
//! non-blocking point-to-point exchange: every rank deposits outgoing packets,
//! the router delivers them, and no rank ever waits on a rank it has no entry
//! for. Correctness must not depend on arrival order, so inboxes are sorted by
//! source rank.

use crate::{Error, Result};

/// One packed packet between a rank pair.
#[derive(Debug, Clone)]
pub struct Packet<T> {
    pub src: usize,
    pub dst: usize,
    /// Source block the packet was packed for.
    pub block: usize,
    pub payload: T,
}

/// Message counters, accumulated per assembly/solve phase.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct CommStats {
    /// Packed query packets sent during query identification.
    pub query_messages: usize,
    /// Donor-record packets sent back over the reversed map.
    pub reply_messages: usize,
    /// Value-gather packets sent per interpolation application.
    pub interp_messages: usize,
    /// Halo-exchange packets.
    pub halo_messages: usize,
    /// What the unpacked scheme would have cost: one tuple per
    /// (block-pair, ordered rank-pair) with intersecting boxes (test oracle).
    pub unpacked_tuples: usize,
}

impl CommStats {
    pub fn add(&mut self, other: &CommStats) {
        self.query_messages += other.query_messages;
        self.reply_messages += other.reply_messages;
        self.interp_messages += other.interp_messages;
        self.halo_messages += other.halo_messages;
        self.unpacked_tuples += other.unpacked_tuples;
    }
}

/// Deliver packets to per-destination inboxes, sorted by (src, block) so the
/// result is independent of deposit order.
pub fn route<T>(nranks: usize, outgoing: Vec<Packet<T>>) -> Result<Vec<Vec<Packet<T>>>> {
    let mut inboxes: Vec<Vec<Packet<T>>> = (0..nranks).map(|_| Vec::new()).collect();
    for p in outgoing {
        if p.dst >= nranks || p.src >= nranks {
            return Err(Error::TransportFailure(format!(
                "packet {} -> {} outside rank range 0..{}",
                p.src, p.dst, nranks
            )));
        }
        inboxes[p.dst].push(p);
    }
    for inbox in &mut inboxes {
        inbox.sort_by_key(|p| (p.src, p.block));
    }
    Ok(inboxes)
}

/// Canonical reduction layout: one slot per (block, plane along that block's
/// split direction). Summing slot partials in order gives results that are
/// bitwise independent of the rank count, because a plane is never split
/// between ranks.
#[derive(Debug, Clone)]
pub struct PlaneLayout {
    offsets: Vec<usize>,
    total: usize,
}

impl PlaneLayout {
    /// `planes_per_block[b]` = number of cells along block b's split direction.
    pub fn new(planes_per_block: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(planes_per_block.len());
        let mut at = 0;
        for &n in planes_per_block {
            offsets.push(at);
            at += n;
        }
        PlaneLayout { offsets, total: at }
    }

    pub fn slot(&self, block: usize, plane: usize) -> usize {
        self.offsets[block] + plane
    }

    pub fn total_slots(&self) -> usize {
        self.total
    }

    /// Sum per-slot partials (each slot written by exactly one rank) in slot
    /// order. `scratch` is reused between calls.
    pub fn reduce(&self, partials: &[Vec<(u32, f64)>], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.resize(self.total, 0.0);
        for chunk in partials {
            for &(slot, v) in chunk {
                scratch[slot as usize] += v;
            }
        }
        scratch.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routing_sorts_by_source() {
        let out = vec![
            Packet { src: 2, dst: 0, block: 0, payload: "c" },
            Packet { src: 1, dst: 0, block: 1, payload: "b" },
            Packet { src: 1, dst: 0, block: 0, payload: "a" },
        ];
        let boxes = route(3, out).unwrap();
        let got: Vec<&str> = boxes[0].iter().map(|p| p.payload).collect();
        assert_eq!(got, vec!["a", "b", "c"]);
        assert!(boxes[1].is_empty() && boxes[2].is_empty());
    }

    #[test]
    fn bad_destination_is_transport_failure() {
        let out = vec![Packet { src: 0, dst: 9, block: 0, payload: () }];
        assert!(matches!(route(2, out), Err(Error::TransportFailure(_))));
    }

    #[test]
    fn plane_reduction_is_grouping_invariant() {
        let layout = PlaneLayout::new(&[4, 3]);
        assert_eq!(layout.total_slots(), 7);
        // the same per-plane partials split across different "rank counts"
        let one = vec![vec![(0u32, 0.1), (1, 0.2), (2, 0.3), (3, 0.4), (4, 1.0), (5, 2.0), (6, 3.0)]];
        let two = vec![
            vec![(0u32, 0.1), (1, 0.2), (4, 1.0)],
            vec![(2u32, 0.3), (3, 0.4), (5, 2.0), (6, 3.0)],
        ];
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        let a = layout.reduce(&one, &mut s1);
        let b = layout.reduce(&two, &mut s2);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
