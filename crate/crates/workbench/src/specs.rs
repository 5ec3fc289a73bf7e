//! Parsers for the short textual specs used on the command line and in
//! config files: shapes, weights, probes and point lists.

use std::path::Path;
use std::str::FromStr;

use fekete_core::domains::{make_weight, Shape, WeightFn, WeightSpec};
use fekete_core::perturbation::PerturbationProbe;
use fekete_core::{Complex64, Point};

use crate::io;

fn numbers(args: &str, what: &str) -> Result<Vec<f64>, String> {
    args.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("{what}: `{s}` is not a number"))
        })
        .collect()
}

fn split(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    }
}

/// `interval[:a,b]`, `circle[:r]`, `disk[:r]`, `square`, `bidisk`, `simplex`.
pub fn parse_shape(spec: &str) -> Result<Shape, String> {
    let (kind, args) = split(spec);
    let nums = match args {
        Some(a) if !a.is_empty() => numbers(a, kind)?,
        _ => Vec::new(),
    };
    let shape = match (kind, nums.as_slice()) {
        ("interval", []) => Shape::Interval { a: -1.0, b: 1.0 },
        ("interval", [a, b]) => Shape::Interval { a: *a, b: *b },
        ("circle", []) => Shape::Circle { radius: 1.0 },
        ("circle", [r]) => Shape::Circle { radius: *r },
        ("disk", []) => Shape::Disk { radius: 1.0 },
        ("disk", [r]) => Shape::Disk { radius: *r },
        ("square", []) => Shape::Square,
        ("bidisk", []) => Shape::Bidisk,
        ("simplex", []) => Shape::Simplex,
        ("interval" | "circle" | "disk" | "square" | "bidisk" | "simplex", _) => {
            return Err(format!("wrong number of parameters for `{kind}`"))
        }
        _ => return Err(format!("unknown shape `{kind}`")),
    };
    shape.validate().map_err(|e| e.to_string())?;
    Ok(shape)
}

/// `constant`, `gaussian[:c]`, `grid:<csv file>`; grid paths are taken
/// relative to `base`.
pub fn parse_weight(spec: &str, base: &Path) -> Result<WeightFn, String> {
    let (kind, args) = split(spec);
    let ws = match (kind, args) {
        ("constant", None) => WeightSpec::Constant,
        ("gaussian", None) => WeightSpec::Gaussian { c: 1.0 },
        ("gaussian", Some(a)) => WeightSpec::Gaussian {
            c: a.parse().map_err(|_| format!("gaussian: `{a}` is not a number"))?,
        },
        ("grid", Some(path)) => {
            let (nodes, q) = io::read_weight_grid(&base.join(path)).map_err(|e| format!("{e:#}"))?;
            WeightSpec::Grid { nodes, q }
        }
        _ => return Err(format!("unknown weight `{spec}`")),
    };
    make_weight(ws).map_err(|e| e.to_string())
}

/// `const:c`, `re:j`, `im:j`, `re2[:j]`, `abs2`, `affine:c0,re_1,im_1,...`;
/// coordinates are 1-based.
pub fn parse_probe(spec: &str, d: usize) -> Result<PerturbationProbe, String> {
    let (kind, args) = split(spec);
    let coord = |a: Option<&str>| -> Result<usize, String> {
        let j: usize = match a {
            None => 1,
            Some(s) => s.parse().map_err(|_| format!("{kind}: `{s}` is not a coordinate"))?,
        };
        if j == 0 || j > d {
            return Err(format!("{kind}: coordinate {j} out of range 1..={d}"));
        }
        Ok(j - 1)
    };
    let unit = |j: usize| {
        let mut v = vec![0.0; d];
        v[j] = 1.0;
        v
    };
    let probe = match kind {
        "const" => PerturbationProbe::Constant {
            c: args
                .ok_or("const: missing value")?
                .parse()
                .map_err(|_| "const: not a number".to_string())?,
        },
        "re" => PerturbationProbe::Affine {
            c0: 0.0,
            re: unit(coord(args)?),
            im: vec![0.0; d],
        },
        "im" => PerturbationProbe::Affine {
            c0: 0.0,
            re: vec![0.0; d],
            im: unit(coord(args)?),
        },
        "re2" => PerturbationProbe::RealPartSquared { coord: coord(args)? },
        "abs2" => PerturbationProbe::AbsSquared,
        "affine" => {
            let v = numbers(args.ok_or("affine: missing coefficients")?, "affine")?;
            if v.len() != 1 + 2 * d {
                return Err(format!("affine: expected {} numbers", 1 + 2 * d));
            }
            PerturbationProbe::Affine {
                c0: v[0],
                re: (0..d).map(|j| v[1 + 2 * j]).collect(),
                im: (0..d).map(|j| v[2 + 2 * j]).collect(),
            }
        }
        _ => return Err(format!("unknown probe `{kind}`")),
    };
    probe.validate(d).map_err(|e| e.to_string())?;
    Ok(probe)
}

/// Points separated by `;`, coordinates by `,`, each coordinate a complex
/// literal such as `0.5`, `-1+2i` or `0.25i`.
pub fn parse_points(spec: &str, d: usize) -> Result<Vec<Point>, String> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let coords: Vec<Complex64> = p
                .split(',')
                .map(|c| Complex64::from_str(c.trim()).map_err(|_| format!("`{c}` is not a complex number")))
                .collect::<Result<_, _>>()?;
            if coords.len() != d {
                return Err(format!("point `{p}` has {} coordinates, expected {d}", coords.len()));
            }
            Ok(coords)
        })
        .collect()
}
