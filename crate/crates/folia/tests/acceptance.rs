//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use folia::conjugacy::{conjugate, round_trip_error, BoundaryMap, ConjugacyParams};
use folia::curves::{frechet, frechet_refined, mu_length, Polyline};
use folia::levelsets::{extract_level, frechet_continuity_profile, level_family};
use folia::rectify::{rectify_auto, RectifyParams};
use folia::regularity::{classify, decompose_default, ArcKind, Status};
use folia::{DomainShape, Error, ScalarField, Vector2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn segment(len: f64, n: usize) -> Polyline {
    Polyline::new((0..n).map(|i| Vector2::new(len * i as f64 / (n - 1) as f64, 0.0)).collect()).unwrap()
}

fn c1_mu_segment() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for s in [1.0, 2.0] {
        let oracle: f64 = (1..=60).map(|n| s / (n as f64 * 2f64.powi(n))).sum();
        let mu = mu_length(&segment(s, 1024), 1e-6 * s).map_err(|e| e.to_string())?;
        worst = worst.max((mu - oracle).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        worst <= 1e-3 && secs < 1.0,
        format!("max |mu - s ln 2| = {worst:.2e}, {secs:.2} s"),
        format!("error {worst:.2e}, runtime {secs:.2} s"),
    )
}

/// A random simple polyline: a walk with strictly increasing x.
fn random_polyline(rng: &mut StdRng) -> Polyline {
    let n = rng.random_range(3..40);
    let mut x = 0.0;
    let pts = (0..n)
        .map(|_| {
            x += rng.random_range(0.01..0.2);
            Vector2::new(x, rng.random_range(-0.5..0.5))
        })
        .collect();
    Polyline::new(pts).unwrap()
}

fn c2_mu_lower_bound() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..50 {
        let c = random_polyline(&mut rng);
        let eps = 1e-4 * c.diameter();
        let mu = mu_length(&c, eps).map_err(|e| e.to_string())?;
        if mu < c.diameter() / 2.0 - eps {
            violations += 1;
        }
    }
    check(violations == 0, "0 violations in 50 polylines".into(), format!("{violations} violations"))
}

fn c3_frechet() -> Outcome {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(11);
    let spacing = 0.01;
    let (mut asym, mut tri) = (0usize, 0usize);
    for _ in 0..100 {
        let a = random_polyline(&mut rng);
        let b = random_polyline(&mut rng);
        let c = random_polyline(&mut rng);
        let ab = frechet_refined(a.vertices(), b.vertices(), spacing);
        let ba = frechet_refined(b.vertices(), a.vertices(), spacing);
        if ab != ba || frechet(&a, &b) != frechet(&b, &a) {
            asym += 1;
        }
        let bc = frechet_refined(b.vertices(), c.vertices(), spacing);
        let ac = frechet_refined(a.vertices(), c.vertices(), spacing);
        if ac > ab + bc + 2.0 * spacing {
            tri += 1;
        }
    }
    let off = 0.37;
    let a = [Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0)];
    let b = [Vector2::new(0.0, off), Vector2::new(1.0, off)];
    let par = (frechet_refined(&a, &b, 1e-3) - off).abs();
    let secs = t.elapsed().as_secs_f64();
    check(
        asym == 0 && tri == 0 && par <= 1e-9 && secs < 5.0,
        format!("symmetric, triangle ok on 100 triples, offset error {par:.1e}, {secs:.2} s"),
        format!("asymmetric {asym}, triangle violations {tri}, offset error {par:.1e}, {secs:.2} s"),
    )
}

fn max_gap(field: &ScalarField, count: usize) -> Result<(f64, f64), String> {
    let dec = decompose_default(field).map_err(|e| e.to_string())?;
    let fam = level_family(field, &dec, count).map_err(|e| e.to_string())?;
    let prof = frechet_continuity_profile(&fam).map_err(|e| e.to_string())?;
    let gap = prof.iter().map(|p| p.1).fold(0.0, f64::max);
    let spacing = (fam.levels[fam.levels.len() - 1] - fam.levels[0]) / (count - 1) as f64;
    Ok((gap, spacing))
}

fn c4_continuity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, f) in [("y", square(|_, y| y)), ("warped", square(warped))] {
        let (g1, s1) = max_gap(&f, 101)?;
        let (g2, _) = max_gap(&f, 201)?;
        let bounded = g1 <= 3.0 * s1;
        let halves = g2 <= 1.5 * g1 / 2.0;
        ok &= bounded && halves;
        notes.push(format!("{name}: {g1:.4} (<= {:.4}), halved {g2:.4}", 3.0 * s1));
    }
    check(ok, notes.join("; "), notes.join("; "))
}

fn c5_arc_count() -> Outcome {
    let mut bad = Vec::new();
    for (name, f) in regular_fixtures() {
        let dec = decompose_default(&f).map_err(|e| format!("{name}: {e}"))?;
        let v = classify(&f, &dec);
        if v.status != Status::WeaklyRegular || v.n_f != 2 {
            bad.push(format!("{name}: {} n_f={}", v.status, v.n_f));
        }
    }
    check(bad.is_empty(), "all 9 fixtures weakly regular with n_f = 2".into(), bad.join("; "))
}

fn c6_level_structure() -> Outcome {
    let mut bad = Vec::new();
    for (name, f) in regular_fixtures() {
        let dec = decompose_default(&f).map_err(|e| format!("{name}: {e}"))?;
        let (lo, hi) = match dec.extremal_arcs() {
            (Some(a), Some(b)) => (dec.arcs[a].level.unwrap(), dec.arcs[b].level.unwrap()),
            _ => return Err(format!("{name}: no extremal arcs")),
        };
        for i in 1..=25 {
            let c = lo + (hi - lo) * i as f64 / 26.0;
            let comps = match extract_level(&f, &dec, c) {
                Ok(v) => v,
                Err(e) => {
                    bad.push(format!("{name} c={c:.3}: {e}"));
                    continue;
                }
            };
            if comps.len() != 1 {
                bad.push(format!("{name} c={c:.3}: {} components", comps.len()));
                continue;
            }
            let curve = &comps[0];
            let simple = curve.polyline().map(|p| p.is_simple(0.0)).unwrap_or(false);
            let monotone = |k: usize| dec.arcs[k].kind == ArcKind::Monotone;
            if !simple || curve.start_arc == curve.end_arc || !monotone(curve.start_arc) || !monotone(curve.end_arc) {
                bad.push(format!("{name} c={c:.3}: simple={simple} arcs {} {}", curve.start_arc, curve.end_arc));
            }
        }
    }
    check(bad.is_empty(), "25 levels x 9 fixtures: one simple arc between distinct monotone arcs".into(), bad.join("; "))
}

fn rect_params() -> RectifyParams {
    RectifyParams { levels: 65, samples: 65, ..Default::default() }
}

fn grid_error(h: &folia::rectify::DiscreteHomeomorphism, want: impl Fn(Vector2) -> Vector2) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..h.m {
        for i in 0..h.k {
            worst = worst.max(h.grid[j][i].dist(want(h.lattice_point(i, j))));
        }
    }
    worst
}

fn c7_rectification() -> Outcome {
    let mut bad = Vec::new();
    let mut slowest = 0.0f64;
    for (name, f) in regular_fixtures() {
        let t = Instant::now();
        let h = match rectify_auto(&f, &rect_params()) {
            Ok(h) => h,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let res = h.measure_residual(&f);
        let tol = 3.0 * f.h() * (1.0 + f.max_gradient());
        if !(res <= tol) || !h.orientation_ok || secs >= 10.0 {
            bad.push(format!("{name}: residual {res:.2e} (tol {tol:.2e}), orientation {}, {secs:.1} s", h.orientation_ok));
        }
        let exact = match name {
            "square y" => Some((grid_error(&h, |p| p), f.h())),
            "square y^2" => Some((grid_error(&h, |p| Vector2::new(p.x, p.y.sqrt())), 2.0 * f.h())),
            _ => None,
        };
        if let Some((err, tol)) = exact {
            if err > tol {
                bad.push(format!("{name}: lattice error {err:.2e} > {tol:.2e}"));
            }
        }
    }
    check(bad.is_empty(), format!("9 fixtures within tol_rect, oriented, slowest {slowest:.2} s"), bad.join("; "))
}

fn c8_models() -> Outcome {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for (name, f) in [("half-disk y", half_disk(|_, y| y)), ("disk y", disk(|_, y| y)), ("disk y^3", disk(|_, y| y * y * y))] {
        let h = rectify_auto(&f, &rect_params()).map_err(|e| format!("{name}: {e}"))?;
        if name.ends_with(" y") {
            let err = grid_error(&h, |p| p);
            if err > 2.0 * f.h() {
                bad.push(format!("{name}: identity error {err:.2e}"));
            }
        }
        if h.target_shape == DomainShape::Disk {
            let dec = decompose_default(&f).map_err(|e| e.to_string())?;
            let (lo, hi) = dec.extremal_arcs();
            let (fm, fp) = (dec.arcs[lo.unwrap()].level.unwrap(), dec.arcs[hi.unwrap()].level.unwrap());
            let mut worst = 0.0f64;
            for j in 0..h.m {
                let y = 2.0 * j as f64 / (h.m - 1) as f64 - 1.0;
                let target = ((1.0 - y) * fm + (1.0 + y) * fp) / 2.0;
                for p in &h.grid[j] {
                    worst = worst.max((f.eval_unchecked(*p) - target).abs());
                }
            }
            if worst > f.default_tol_rect() {
                bad.push(format!("{name}: target residual {worst:.2e}"));
            }
        }
        if h.seam_mismatch > f.h() {
            bad.push(format!("{name}: seam {:.2e}", h.seam_mismatch));
        }
        notes.push(format!("{name}: {} bands, seam {:.1e}", h.bands, h.seam_mismatch));
    }
    let probe = rectify_auto(&disk(|_, y| y * y * y), &rect_params()).map_err(|e| e.to_string())?;
    let p = probe.apply(Vector2::new(0.0, 0.5)).map_err(|e| e.to_string())?;
    if p.dist(Vector2::new(0.0, 0.5f64.cbrt())) > 2.0 * probe.lattice_spacing() {
        bad.push(format!("disk y^3: H(0, 0.5) = {p:?}"));
    }
    check(bad.is_empty(), notes.join("; "), bad.join("; "))
}

fn c9_conjugacy() -> Outcome {
    let params = ConjugacyParams { rectify: rect_params(), tol_conj: None };
    let sq = DomainShape::Square;
    let cases: Vec<(&str, ScalarField, ScalarField, Box<dyn Fn(Vector2) -> Vector2>)> = vec![
        ("identity", square(|_, y| y), square(|_, y| y), Box::new(|p| p)),
        ("flip", square(|_, y| y), square(|_, y| y), Box::new(|p: Vector2| Vector2::new(1.0 - p.x, p.y))),
        ("y^2 to y", square(|_, y| y * y), square(|_, y| y), Box::new(|p: Vector2| Vector2::new(p.x, p.y * p.y))),
    ];
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for (name, f, g, map) in cases {
        let phi0 = BoundaryMap::from_point_map(sq, sq, 512, &map).map_err(|e| e.to_string())?;
        let c = conjugate(&f, &g, &phi0, &params).map_err(|e| format!("{name}: {e}"))?;
        let back = conjugate(&g, &f, &phi0.inverse().map_err(|e| e.to_string())?, &params).map_err(|e| format!("{name} back: {e}"))?;
        let spacing = c.phi.lattice_spacing();
        let trip = round_trip_error(&c.phi, &back.phi);
        let r = &c.report;
        let close = grid_error(&c.phi, &map);
        if !(r.residual <= 3.0 * f.h()) || r.boundary_deviation > 2.0 * spacing || trip > 4.0 * spacing || !r.orientation_ok || close > 3.0 * f.h() {
            bad.push(format!(
                "{name}: residual {:.2e}, boundary {:.2e}, round trip {trip:.2e}, oriented {}, vs closed form {close:.2e}",
                r.residual, r.boundary_deviation, r.orientation_ok
            ));
        }
        notes.push(format!("{name}: residual {:.1e}, round trip {trip:.1e}", r.residual));
    }
    check(bad.is_empty(), notes.join("; "), bad.join("; "))
}

fn c10_negative() -> Outcome {
    let plateau = square(|_, y| y.min(0.8));
    let status = match decompose_default(&plateau) {
        Ok(dec) => classify(&plateau, &dec).status,
        Err(_) => Status::NotRegular,
    };
    let bowl = square(|x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2));
    let dec = decompose_default(&bowl).map_err(|e| e.to_string())?;
    let loop_err = matches!(extract_level(&bowl, &dec, 0.04), Err(Error::ClosedLoop { .. }));
    check(
        status == Status::NotRegular && loop_err,
        "plateau not_regular; closed loop rejected".into(),
        format!("plateau {status}, loop rejected {loop_err}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("mu-length of segments", c1_mu_segment),
        ("mu-length lower bound", c2_mu_lower_bound),
        ("Frechet metric suite", c3_frechet),
        ("Frechet continuity of level families", c4_continuity),
        ("two monotone arcs", c5_arc_count),
        ("level structure", c6_level_structure),
        ("rectification residual", c7_rectification),
        ("half-disk and disk constructions", c8_models),
        ("conjugacy", c9_conjugacy),
        ("negative controls", c10_negative),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name} [{secs:.1} s]: {msg}", n + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1} s]: {msg}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
