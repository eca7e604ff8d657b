//! JSON channel dumps for replaying one realization across solvers.
//!
//! Complex entries are `[re, im]` pairs. `g` is stored row-major as `N` rows
//! of `M` entries; every other field is a plain vector (or a list of vectors
//! for the per-user links).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDump {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub h_d: Vec<Vec<[f64; 2]>>,
    pub h_r: Vec<Vec<[f64; 2]>>,
    pub g: Vec<Vec<[f64; 2]>>,
    pub h_dt: Vec<[f64; 2]>,
    pub h_rt: Vec<[f64; 2]>,
}

fn pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn complex(v: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1])))
}

impl From<&ChannelSet> for ChannelDump {
    fn from(cs: &ChannelSet) -> Self {
        ChannelDump {
            m: cs.m(),
            n: cs.n(),
            k: cs.k(),
            h_d: cs.h_d.iter().map(pairs).collect(),
            h_r: cs.h_r.iter().map(pairs).collect(),
            g: cs
                .g
                .row_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            h_dt: pairs(&cs.h_dt),
            h_rt: pairs(&cs.h_rt),
        }
    }
}

impl ChannelDump {
    pub fn into_channels(self) -> std::result::Result<ChannelSet, String> {
        let (m, n, k) = (self.m, self.n, self.k);
        let shape_ok = self.h_d.len() == k
            && self.h_r.len() == k
            && self.h_d.iter().all(|h| h.len() == m)
            && self.h_r.iter().all(|h| h.len() == n)
            && self.g.len() == n
            && self.g.iter().all(|r| r.len() == m)
            && self.h_dt.len() == m
            && self.h_rt.len() == n;
        if !shape_ok {
            return Err(format!("entries do not match declared M={m} N={n} K={k}"));
        }
        let all_finite = [&self.h_dt, &self.h_rt]
            .into_iter()
            .chain(self.h_d.iter())
            .chain(self.h_r.iter())
            .chain(self.g.iter())
            .flat_map(|v| v.iter())
            .all(|p| p[0].is_finite() && p[1].is_finite());
        if !all_finite {
            return Err("non-finite channel entry".into());
        }
        let g = CMat::from_fn(n, m, |r, c| C64::new(self.g[r][c][0], self.g[r][c][1]));
        Ok(ChannelSet {
            h_d: self.h_d.iter().map(|v| complex(v)).collect(),
            h_r: self.h_r.iter().map(|v| complex(v)).collect(),
            g,
            h_dt: complex(&self.h_dt),
            h_rt: complex(&self.h_rt),
        })
    }
}

pub fn save_channels(cs: &ChannelSet, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&ChannelDump::from(cs))
        .map_err(|e| Error::parse(path, e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_channels(path: &Path) -> Result<ChannelSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dump: ChannelDump = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    dump.into_channels().map_err(|e| Error::parse(path, e))
}
