// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use super::WaveRef;
use crate::Tick;

const TICK_BYTES: u64 = std::mem::size_of::<Tick>() as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("waveform arena needs {needed} bytes, cap is {cap} bytes")]
pub struct CapacityExceeded {
    pub needed: u64,
    pub cap: u64,
}

/// Region offsets produced by [`allocate_arena`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArenaLayout {
    /// Exclusive prefix sum of the toggle counts.
    pub offsets: Vec<usize>,
    pub total: usize,
}

/// Lays out regions of `tc[i]` timestamps back to back, starting at `base`.
/// Fails when `base + Σ tc` timestamps do not fit in `cap_bytes`.
pub fn allocate_arena(
    tc: &[u32],
    base: usize,
    cap_bytes: Option<u64>,
) -> Result<ArenaLayout, CapacityExceeded> {
    let mut offsets = Vec::with_capacity(tc.len());
    let mut at = base;
    for &c in tc {
        offsets.push(at);
        at += c as usize;
    }
    let needed = at as u64 * TICK_BYTES;
    if let Some(cap) = cap_bytes {
        if needed > cap {
            return Err(CapacityExceeded { needed, cap });
        }
    }
    Ok(ArenaLayout {
        offsets,
        total: at - base,
    })
}

/// Per-(gate, window) results other than the timestamps themselves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegionStats {
    pub initial: bool,
    pub filtered: u32,
    pub discarded: u32,
}

/// One contiguous timestamp buffer holding every gate output waveform of a
/// run.
///
/// Regions are ordered by (level, gate, window): region `rank * windows + w`
/// belongs to the gate at position `rank` of the levelized order. Levels are
/// appended one at a time once their toggle counts are known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveformArena {
    windows: usize,
    first_window: usize,
    cap_bytes: Option<u64>,
    buf: Vec<Tick>,
    /// Region start offsets, plus the end of the last region.
    offsets: Vec<usize>,
    initial: Vec<bool>,
    /// Filtered pulses per gate rank, summed over windows.
    filtered: Vec<u64>,
    discarded: u64,
}

impl WaveformArena {
    /// An empty arena for `windows` windows starting at absolute window
    /// `first_window`.
    pub fn new(windows: usize, first_window: usize, cap_bytes: Option<u64>) -> Self {
        WaveformArena {
            windows,
            first_window,
            cap_bytes,
            buf: Vec::new(),
            offsets: vec![0],
            initial: Vec::new(),
            filtered: Vec::new(),
            discarded: 0,
        }
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn first_window(&self) -> usize {
        self.first_window
    }

    /// Number of gates whose regions are allocated.
    pub fn gates(&self) -> usize {
        self.initial.len() / self.windows.max(1)
    }

    pub fn regions(&self) -> usize {
        self.initial.len()
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn bytes(&self) -> u64 {
        self.buf.len() as u64 * TICK_BYTES
    }

    /// `[offset, offset + capacity)` of a region.
    pub fn region(&self, region: usize) -> Range<usize> {
        self.offsets[region]..self.offsets[region + 1]
    }

    pub fn wave(&self, rank: usize, window: usize) -> WaveRef<'_> {
        let r = rank * self.windows + window;
        WaveRef {
            initial: self.initial[r],
            times: &self.buf[self.region(r)],
        }
    }

    pub fn filtered(&self, rank: usize) -> u64 {
        self.filtered[rank]
    }

    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    pub fn total_filtered(&self) -> u64 {
        self.filtered.iter().sum()
    }

    /// Reserves the next level's regions (one per (gate, window), in order)
    /// sized by the counting pass. Returns the region index range.
    pub fn reserve_level(
        &mut self,
        counts: &[u32],
        stats: &[RegionStats],
    ) -> Result<Range<usize>, CapacityExceeded> {
        assert_eq!(counts.len(), stats.len());
        assert_eq!(counts.len() % self.windows.max(1), 0, "whole gates only");
        let layout = allocate_arena(counts, self.buf.len(), self.cap_bytes)?;
        let first = self.initial.len();
        self.buf.resize(self.buf.len() + layout.total, 0);
        self.offsets.extend(layout.offsets.iter().skip(1));
        self.offsets.push(self.buf.len());
        self.initial.extend(stats.iter().map(|s| s.initial));
        for gate in stats.chunks(self.windows.max(1)) {
            self.filtered
                .push(gate.iter().map(|s| u64::from(s.filtered)).sum());
            self.discarded += gate.iter().map(|s| u64::from(s.discarded)).sum::<u64>();
        }
        Ok(first..self.initial.len())
    }

    /// Splits the arena into a read view of everything before `regions` and
    /// the writable buffers of `regions`, chunked so that chunk `i` spans the
    /// regions `bounds[i]..bounds[i + 1]` (relative to `regions.start`).
    pub fn split_level(
        &mut self,
        regions: Range<usize>,
        bounds: &[usize],
    ) -> (ArenaReader<'_>, Vec<&mut [Tick]>) {
        let start = self.offsets[regions.start];
        let (done, rest) = self.buf.split_at_mut(start);
        let mut chunks = Vec::with_capacity(bounds.len().saturating_sub(1));
        let mut rest = &mut rest[..self.offsets[regions.end] - start];
        for pair in bounds.windows(2) {
            let len = self.offsets[regions.start + pair[1]] - self.offsets[regions.start + pair[0]];
            let (head, tail) = rest.split_at_mut(len);
            chunks.push(head);
            rest = tail;
        }
        let reader = ArenaReader {
            windows: self.windows,
            buf: done,
            offsets: &self.offsets,
            initial: &self.initial,
        };
        (reader, chunks)
    }

    pub fn reader(&self) -> ArenaReader<'_> {
        ArenaReader {
            windows: self.windows,
            buf: &self.buf,
            offsets: &self.offsets,
            initial: &self.initial,
        }
    }
}

/// Read access to completed regions while later regions are being written.
#[derive(Debug, Clone, Copy)]
pub struct ArenaReader<'a> {
    windows: usize,
    buf: &'a [Tick],
    offsets: &'a [usize],
    initial: &'a [bool],
}

impl<'a> ArenaReader<'a> {
    pub fn wave(&self, rank: usize, window: usize) -> WaveRef<'a> {
        let r = rank * self.windows + window;
        WaveRef {
            initial: self.initial[r],
            times: &self.buf[self.offsets[r]..self.offsets[r + 1]],
        }
    }

    pub fn region_offset(&self, region: usize) -> usize {
        self.offsets[region]
    }
}
