//! Intersections of `ss`-disks with the local unstable set of the blender.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::disk::SsDisk;
use super::{Blender, BlenderError};
use crate::linalg::operator_norm;

const IMAGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Point on the disk.
    pub point: Vec<f64>,
    /// Disk parameter of `point`.
    pub param: Vec<f64>,
    /// Branch indices of the backward orbit, starting at 0.
    pub itinerary: Vec<usize>,
    /// The itinerary with branches labelled from 1.
    pub itinerary_label: String,
    /// Bound on the distance from `point` to the local unstable set.
    pub residual: f64,
    /// Largest distance of a backward iterate from its branch domain.
    pub orbit_excursion: f64,
}

fn grid_points(lo: &DVector<f64>, hi: &DVector<f64>) -> Vec<DVector<f64>> {
    let d = lo.len();
    let mut out = vec![lo.clone()];
    for q in 0..d {
        let mut next = Vec::with_capacity(out.len() * 3);
        for p in &out {
            for f in [0.0, 0.5, 1.0] {
                let mut r = p.clone();
                r[q] = lo[q] + f * (hi[q] - lo[q]);
                next.push(r);
            }
        }
        out = next;
    }
    out
}

/// Pulls `disk` back through the branches `depth` times, choosing at each
/// step the lowest branch whose central image contains the pulled-back disk.
///
/// The pulled-back disk at step `j` is a graph over the `ss`-box; its
/// points are `Phi_j(sigma)` for the composite `ss` map `Phi_j`, with central
/// coordinates `G_j^{-1}(c)` for the composite central map `G_j`. The
/// witness is the disk point above the fixed point of `Phi_depth`; its
/// residual is the diameter of the disk piece over `Phi_depth(U_ss)`.
pub fn verify_superposition(b: &Blender, disk: &SsDisk, depth: usize) -> Result<Witness, BlenderError> {
    let d_ss = b.d_ss;
    let ss_box = b.ss_box();
    let c_box = b.central_box();
    let ss_lo = DVector::from_column_slice(&ss_box.lo);
    let ss_hi = DVector::from_column_slice(&ss_box.hi);
    let mut phi_m = DMatrix::<f64>::identity(d_ss, d_ss);
    let mut phi_o = DVector::<f64>::zeros(d_ss);
    let mut g_scale = DVector::<f64>::from_element(b.d_cs, 1.0);
    let mut g_off = DVector::<f64>::zeros(b.d_cs);
    let mut itinerary = Vec::with_capacity(depth);
    let central_of = |sigma: &DVector<f64>, m: &DMatrix<f64>, o: &DVector<f64>, gs: &DVector<f64>, go: &DVector<f64>| {
        let target = m * sigma + o;
        let s = disk.solve_ss(b, &target);
        let p = disk.point(&s);
        (p.rows(d_ss, b.d_cs) - go).component_div(gs)
    };
    for step in 0..depth {
        let mut chosen = None;
        let mut probe = None;
        for i in 0..b.branches.len() {
            let br = &b.branches[i];
            let img = b.central_image(i).intersect(&c_box);
            if img.is_empty() {
                continue;
            }
            let piece = ss_box.linear_image(&br.ss, Some(&b.ss_offset(i)));
            let (lo, hi) = (
                DVector::from_column_slice(&piece.lo),
                DVector::from_column_slice(&piece.hi),
            );
            let inside = grid_points(&lo, &hi).iter().all(|sigma| {
                let kappa = central_of(sigma, &phi_m, &phi_o, &g_scale, &g_off);
                if probe.is_none() {
                    probe = Some(kappa.clone());
                }
                img.contains_with_tol(kappa.as_slice(), IMAGE_TOL)
            });
            if inside {
                chosen = Some(i);
                break;
            }
        }
        let Some(i) = chosen else {
            let center = (&ss_lo + &ss_hi) * 0.5;
            let kappa = probe.unwrap_or_else(|| central_of(&center, &phi_m, &phi_o, &g_scale, &g_off));
            return Err(BlenderError::CoverageGap {
                depth: step,
                central: kappa.iter().cloned().collect(),
            });
        };
        let br = &b.branches[i];
        phi_o = &phi_m * b.ss_offset(i) + &phi_o;
        phi_m = &phi_m * &br.ss;
        g_off = g_scale.component_mul(&b.central_offset(i)) + &g_off;
        g_scale = g_scale.component_mul(&br.central);
        itinerary.push(i);
    }
    let n = phi_m.nrows();
    let fixed = (DMatrix::identity(n, n) - &phi_m).lu().solve(&phi_o);
    let target = match fixed {
        Some(x) if ss_box.contains(x.as_slice()) => x,
        _ => &phi_m * (&ss_lo + &ss_hi) * 0.5 + &phi_o,
    };
    let s = disk.solve_ss(b, &target);
    let p = disk.point(&s);
    let piece_diam = operator_norm(&phi_m) * ss_box.diameter();
    let residual = piece_diam * (1.0 + disk.tangent_bound.tan());
    let mut q = p.clone();
    let mut excursion: f64 = 0.0;
    for &i in &itinerary {
        q = b.apply_inverse(i, &q);
        let dom = &b.branches[i].domain;
        for k in 0..q.len() {
            excursion = excursion.max(dom.lo[k] - q[k]).max(q[k] - dom.hi[k]);
        }
    }
    Ok(Witness {
        point: p.iter().cloned().collect(),
        param: s,
        itinerary_label: itinerary.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(""),
        itinerary,
        residual,
        orbit_excursion: excursion,
    })
}

/// Moves the first `d_cs - keep` central coordinates into the `ss` block.
///
/// Needs central rates strictly increasing along the coordinates, with the
/// largest rate of a moved coordinate below the smallest rate of the next
/// one over all branches.
pub fn reduce_central_dimension(b: &Blender, keep: usize) -> Result<Blender, BlenderError> {
    if keep == 0 || keep >= b.d_cs {
        return Err(BlenderError::InvalidSpec(format!(
            "keep must lie in [1, {}), got {keep}",
            b.d_cs
        )));
    }
    for q in 0..b.d_cs - 1 {
        let top = b.branches.iter().map(|br| br.central[q].abs()).fold(0.0, f64::max);
        let next = b
            .branches
            .iter()
            .map(|br| br.central[q + 1].abs())
            .fold(f64::INFINITY, f64::min);
        if top >= next {
            return Err(BlenderError::NotDominated);
        }
    }
    let moved = b.d_cs - keep;
    let mut out = b.clone();
    out.d_ss = b.d_ss + moved;
    out.d_cs = keep;
    for br in out.branches.iter_mut() {
        let mut ss = DMatrix::zeros(out.d_ss, out.d_ss);
        ss.view_mut((0, 0), (b.d_ss, b.d_ss)).copy_from(&br.ss);
        for q in 0..moved {
            ss[(b.d_ss + q, b.d_ss + q)] = br.central[q];
        }
        br.ss = ss;
        br.central = br.central.rows(moved, keep).into_owned();
    }
    Ok(out)
}
