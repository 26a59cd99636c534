//! Subalgebra specs for `transport`:
//!
//! - `diag:N` diagonal matrices in `M_N`
//! - `blocks:2,1` consecutive diagonal blocks
//! - `tensor:K,M` the factor `M_K ⊗ I_M`
//! - `span:FILE` the span of a JSON array of matrix documents
//!
//! A suffix `@THETA` (a float, or `pi/D`, `K*pi/D`) conjugates the
//! subalgebra by the rotation through `THETA` in coordinates 0 and 1.

use std::f64::consts::PI;
use std::path::Path;

use projgeo::jones::SubalgebraSpec;
use projgeo::numkit::plane_rotation;

use crate::doc::read_matrix_list;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct ParsedSpec {
    pub spec: SubalgebraSpec,
    pub n: usize,
    /// Bytes of a referenced span file, for the input digest.
    pub file: Option<(String, Vec<u8>)>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad integer `{x}` in spec")))
        })
        .collect()
}

pub fn parse_angle(s: &str) -> Result<f64, CliError> {
    let bad = || usage(format!("bad angle `{s}`"));
    let s = s.trim();
    let v = if let Some((num, den)) = s.split_once("pi/") {
        let k = match num.trim_end_matches('*') {
            "" => 1.0,
            k => k.parse::<f64>().map_err(|_| bad())?,
        };
        let d = den.parse::<f64>().map_err(|_| bad())?;
        k * PI / d
    } else if let Some(k) = s.strip_suffix("pi") {
        let k = match k.trim_end_matches('*') {
            "" => 1.0,
            k => k.parse::<f64>().map_err(|_| bad())?,
        };
        k * PI
    } else {
        s.parse::<f64>().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_spec(text: &str) -> Result<ParsedSpec, CliError> {
    let (body, angle) = match text.split_once('@') {
        Some((b, a)) => (b, Some(parse_angle(a)?)),
        None => (text, None),
    };
    let (kind, arg) = body
        .split_once(':')
        .ok_or_else(|| usage(format!("spec `{text}` must look like kind:args")))?;
    let mut file = None;
    let (spec, n) = match kind {
        "diag" => {
            let n = parse_list(arg)?;
            let [n] = n[..] else {
                return Err(usage("diag takes one dimension"));
            };
            (SubalgebraSpec::diagonal(n), n)
        }
        "blocks" => {
            let sizes = parse_list(arg)?;
            if sizes.contains(&0) {
                return Err(usage("block sizes must be positive"));
            }
            (SubalgebraSpec::blocks(&sizes), sizes.iter().sum())
        }
        "tensor" => {
            let km = parse_list(arg)?;
            let [k, m] = km[..] else {
                return Err(usage("tensor takes K,M"));
            };
            (SubalgebraSpec::TensorFactor { k, m }, k * m)
        }
        "span" => {
            let (bytes, mats) = read_matrix_list(Path::new(arg))?;
            let n = mats
                .first()
                .map(|m| m.nrows())
                .ok_or_else(|| usage("span file is empty"))?;
            file = Some((arg.to_string(), bytes));
            (SubalgebraSpec::MatrixSpan(mats), n)
        }
        other => return Err(usage(format!("unknown spec kind `{other}`"))),
    };
    if n == 0 {
        return Err(usage("spec has dimension 0"));
    }
    let spec = match angle {
        Some(theta) => {
            if n < 2 {
                return Err(usage("rotation needs dimension at least 2"));
            }
            spec.conjugated(&plane_rotation(n, 0, 1, theta))?
        }
        None => spec,
    };
    Ok(ParsedSpec { spec, n, file })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi/8").unwrap(), PI / 8.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("pi/x").is_err());
    }

    #[test]
    fn kinds() {
        assert_eq!(parse_spec("diag:3").unwrap().n, 3);
        assert_eq!(parse_spec("blocks:2,1").unwrap().n, 3);
        assert_eq!(parse_spec("tensor:2,3").unwrap().n, 6);
        assert!(matches!(
            parse_spec("diag:2@pi/8").unwrap().spec,
            SubalgebraSpec::MatrixSpan(_)
        ));
        assert!(parse_spec("cube:2").is_err());
        assert!(parse_spec("diag").is_err());
    }
}
