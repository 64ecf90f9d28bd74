//! Configuration schemas and artifact files.
//!
//! Configs are strict JSON: unknown keys are rejected so a typo cannot
//! silently fall back to a default. Reports are canonical JSON; curves and
//! ladders additionally get CSV renderings. Realizations are dumped as raw
//! little-endian doubles with a JSON sidecar carrying the shape, the seed
//! and content hashes.

use crate::error::{Result, RigidityError};
use crate::spectral::builtins;
use crate::spectral::covariance::{CovarianceSequence, TailSpec};
use crate::spectral::density::{Atom, DensityFlags, SpectralDensity, ZeroAnnotation};
use crate::spectral::domain::Domain;
use crate::spectral::expr::Expr;
use crate::spectral::ladder::LadderReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

fn invalid(msg: impl Into<String>) -> RigidityError {
    RigidityError::InvalidInput(msg.into())
}

/// Frequency domain of a configured density.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Torus,
    Euclidean,
}

impl DomainConfig {
    fn build(&self) -> Domain {
        match self.kind {
            DomainKind::Torus => Domain::torus(self.d),
            DomainKind::Euclidean => Domain::euclidean(self.d),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    #[serde(default)]
    pub isotropic: bool,
    #[serde(default)]
    pub separable: bool,
    #[serde(default)]
    pub simple: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroConfig {
    pub location: Vec<f64>,
    pub order: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// A spectral density, either by builtin name or as an expression in the
/// coordinates `u1..ud` (plus `norm` for the Euclidean norm).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    /// Structure factor of a named determinantal kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dpp_kernel: Option<String>,
    /// Required with `expression`; ignored for builtins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zeros: Vec<ZeroConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<FlagsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Numeric parameters of the builtin, e.g. `{"phi": 0.5}`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl DensityConfig {
    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| invalid(format!("builtin requires parameter '{name}'")))
    }

    fn param_or(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    pub fn build(&self) -> Result<SpectralDensity> {
        let sources = [
            self.builtin.is_some(),
            self.expression.is_some(),
            self.dpp_kernel.is_some(),
        ]
        .iter()
        .filter(|&&x| x)
        .count();
        if sources != 1 {
            return Err(invalid(
                "density needs exactly one of: builtin, expression, dpp_kernel",
            ));
        }

        let mut density = if let Some(name) = &self.builtin {
            self.build_builtin(name)?
        } else if let Some(name) = &self.dpp_kernel {
            let kern = crate::dpp::kernel_by_label(name)?;
            kern.structure_factor()?
        } else {
            self.build_expression(self.expression.as_deref().unwrap())?
        };

        if let Some(flags) = &self.flags {
            density = density.with_flags(DensityFlags {
                isotropic: flags.isotropic,
                separable: flags.separable,
                simple: flags.simple,
            });
        }
        // Zero annotations on builtins are replaced only when given.
        if !self.zeros.is_empty() {
            density = density.with_zeros(
                self.zeros
                    .iter()
                    .map(|z| ZeroAnnotation {
                        location: z.location.clone(),
                        order: z.order,
                    })
                    .collect(),
            );
        }
        Ok(density)
    }

    fn build_builtin(&self, name: &str) -> Result<SpectralDensity> {
        match name {
            "white_noise" => builtins::white_noise(self.param_or("d", 1.0) as usize),
            "ma1_unit_root" => builtins::ma1_unit_root(),
            "ar1" => builtins::ar1(self.param("phi")?),
            "quartic_pm1" => builtins::quartic_pm1(),
            "radial_power" => builtins::radial_power(
                self.param_or("d", 1.0) as usize,
                self.param("alpha")?,
                self.param_or("c", 1.0),
            ),
            "gaf_scaling" => builtins::gaf_scaling(self.param_or("c", 1.0)),
            "line_zero_square" => builtins::line_zero_square(),
            "off_origin_valley" => builtins::off_origin_valley(),
            "torus_product_zeros" => builtins::torus_product_zeros(),
            "atomic_with_floor" => builtins::atomic_with_floor(
                self.param("loc")?,
                self.param("mass")?,
                self.param("floor")?,
            ),
            "torus_with_zeros" => {
                if self.zeros.is_empty() {
                    return Err(invalid("torus_with_zeros needs a zeros list"));
                }
                let zeros: Vec<(f64, u32)> = self
                    .zeros
                    .iter()
                    .map(|z| {
                        if z.location.len() != 1 {
                            return Err(invalid("torus_with_zeros is one-dimensional"));
                        }
                        Ok((z.location[0], z.order))
                    })
                    .collect::<Result<_>>()?;
                builtins::torus_with_zeros(&zeros, self.label.as_deref().unwrap_or("configured"))
            }
            other => Err(invalid(format!("unknown builtin density '{other}'"))),
        }
    }

    fn build_expression(&self, src: &str) -> Result<SpectralDensity> {
        let domain = self
            .domain
            .ok_or_else(|| invalid("expression densities need a domain"))?
            .build();
        let expr = Expr::parse(src, domain.dim())?;
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| format!("expr:{src}"));
        SpectralDensity::new(
            domain,
            label,
            DensityFlags::default(),
            self.zeros
                .iter()
                .map(|z| ZeroAnnotation {
                    location: z.location.clone(),
                    order: z.order,
                })
                .collect(),
            self.atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    mass: a.mass,
                })
                .collect(),
            move |u| expr.eval(u),
        )
    }
}

/// A covariance sequence: builtin, moving-average filter, explicit entries,
/// or a CSV file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Moving-average taps; the covariance is their autocorrelation, so it
    /// is positive semidefinite by construction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filter: Vec<FilterTap>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<CovarianceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterTap {
    pub offset: Vec<i64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceEntry {
    pub lag: Vec<i64>,
    pub value: f64,
}

impl CovarianceConfig {
    /// Relative paths in `csv` resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<CovarianceSequence> {
        let sources = [
            self.builtin.is_some(),
            !self.filter.is_empty(),
            !self.entries.is_empty(),
            self.csv.is_some(),
        ]
        .iter()
        .filter(|&&x| x)
        .count();
        if sources != 1 {
            return Err(invalid(
                "covariance needs exactly one of: builtin, filter, entries, csv",
            ));
        }
        if let Some(name) = &self.builtin {
            return match name.as_str() {
                "ar1" => CovarianceSequence::ar1(
                    self.params
                        .get("phi")
                        .copied()
                        .ok_or_else(|| invalid("ar1 requires parameter 'phi'"))?,
                ),
                "white_noise" => CovarianceSequence::new(
                    self.dim.unwrap_or(1),
                    vec![(vec![0; self.dim.unwrap_or(1)], 1.0)],
                    TailSpec::Finite,
                ),
                other => Err(invalid(format!("unknown builtin covariance '{other}'"))),
            };
        }
        if !self.filter.is_empty() {
            let dim = self
                .dim
                .or_else(|| self.filter.first().map(|t| t.offset.len()))
                .unwrap();
            let taps: BTreeMap<Vec<i64>, f64> = self
                .filter
                .iter()
                .map(|t| (t.offset.clone(), t.weight))
                .collect();
            return CovarianceSequence::from_filter(dim, &taps);
        }
        if !self.entries.is_empty() {
            let dim = self
                .dim
                .or_else(|| self.entries.first().map(|e| e.lag.len()))
                .unwrap();
            return CovarianceSequence::new(
                dim,
                self.entries
                    .iter()
                    .map(|e| (e.lag.clone(), e.value))
                    .collect(),
                self.tail.unwrap_or(TailSpec::Finite),
            );
        }
        let rel = self.csv.as_ref().unwrap();
        let path = base.join(rel);
        read_covariance_csv(&path, self.tail.unwrap_or(TailSpec::Finite))
    }
}

/// Covariance CSV: header `m1,..,md,value`, one canonical lag per row.
pub fn write_covariance_csv(path: &Path, cov: &CovarianceSequence) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    let d = cov.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("m{i}")).collect();
    header.push("value".into());
    w.write_record(&header).map_err(csv_err)?;
    for (m, v) in cov.support() {
        let mut rec: Vec<String> = m.iter().map(|x| x.to_string()).collect();
        rec.push(format!("{v:.17e}"));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| invalid(format!("flush failed: {e}")))
}

pub fn read_covariance_csv(path: &Path, tail: TailSpec) -> Result<CovarianceSequence> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() < 2 || headers.get(headers.len() - 1) != Some("value") {
        return Err(invalid(
            "covariance CSV needs columns m1,..,md,value".to_string(),
        ));
    }
    let d = headers.len() - 1;
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != d + 1 {
            return Err(invalid("covariance CSV row width mismatch".to_string()));
        }
        let mut lag = Vec::with_capacity(d);
        for i in 0..d {
            lag.push(
                rec[i]
                    .trim()
                    .parse::<i64>()
                    .map_err(|e| invalid(format!("bad lag '{}': {e}", &rec[i])))?,
            );
        }
        let value = rec[d]
            .trim()
            .parse::<f64>()
            .map_err(|e| invalid(format!("bad value '{}': {e}", &rec[d])))?;
        entries.push((lag, value));
    }
    CovarianceSequence::new(d, entries, tail)
}

fn csv_err(e: csv::Error) -> RigidityError {
    invalid(format!("csv: {e}"))
}

/// Residual curve CSV: `n_outer,residual_variance,target_variance`.
pub fn write_curve_csv(path: &Path, curve: &crate::predictor::ResidualCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["n_outer", "residual_variance", "target_variance"])
        .map_err(csv_err)?;
    for (n, r) in curve.radii.iter().zip(&curve.residuals) {
        w.write_record(&[
            n.to_string(),
            format!("{r:.17e}"),
            format!("{:.17e}", curve.target_variance),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| invalid(format!("flush failed: {e}")))
}

/// Shell ladder CSV: `label,shell,value,fitted_ratio,verdict`, shells
/// outermost first.
pub fn write_ladder_csv(path: &Path, ladders: &[(String, &LadderReport)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["label", "shell", "value", "fitted_ratio", "verdict"])
        .map_err(csv_err)?;
    for (label, ladder) in ladders {
        for (j, v) in ladder.shells.iter().enumerate() {
            w.write_record(&[
                label.clone(),
                j.to_string(),
                format!("{v:.17e}"),
                format!("{:.17e}", ladder.fitted_ratio),
                format!("{:?}", ladder.verdict),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| invalid(format!("flush failed: {e}")))
}

/// Canonical JSON: pretty, key order fixed by the struct, trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| invalid(format!("serialize failed: {e}")))?;
    out.push(b'\n');
    std::fs::write(path, out).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let data = std::fs::read(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&data)
        .map_err(|e| invalid(format!("{} is not valid: {e}", path.display())))
}

/// Sidecar of a realization dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationManifest {
    /// `[replicates, side, ...]`, row-major within each replicate.
    pub shape: Vec<usize>,
    pub seed: u64,
    pub dtype: String,
    /// SHA-256 of the JSON spec the realizations were drawn from.
    pub spec_sha256: String,
    /// SHA-256 of the binary payload.
    pub data_sha256: String,
}

fn sha256_hex(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(data);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Dump realizations as raw little-endian doubles next to a JSON sidecar
/// (`<stem>.f64` and `<stem>.json`).
pub fn write_realizations(
    dir: &Path,
    stem: &str,
    spec_json: &serde_json::Value,
    fields: &[Vec<f64>],
    grid: &[usize],
    seed: u64,
) -> Result<RealizationManifest> {
    let per: usize = grid.iter().product();
    let mut bytes = Vec::with_capacity(fields.len() * per * 8);
    for field in fields {
        if field.len() != per {
            return Err(invalid("realization length does not match the grid"));
        }
        for v in field {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut shape = vec![fields.len()];
    shape.extend_from_slice(grid);
    let spec_bytes =
        serde_json::to_vec(spec_json).map_err(|e| invalid(format!("serialize failed: {e}")))?;
    let manifest = RealizationManifest {
        shape,
        seed,
        dtype: "f64le".into(),
        spec_sha256: sha256_hex(&spec_bytes),
        data_sha256: sha256_hex(&bytes),
    };
    let bin = dir.join(format!("{stem}.f64"));
    let mut f = std::fs::File::create(&bin)
        .map_err(|e| invalid(format!("cannot write {}: {e}", bin.display())))?;
    f.write_all(&bytes)
        .map_err(|e| invalid(format!("write failed: {e}")))?;
    write_json(&dir.join(format!("{stem}.json")), &manifest)?;
    Ok(manifest)
}

/// Load a realization dump, verifying the payload hash.
pub fn read_realizations(dir: &Path, stem: &str) -> Result<(RealizationManifest, Vec<Vec<f64>>)> {
    let manifest: RealizationManifest = read_json(&dir.join(format!("{stem}.json")))?;
    let bin = dir.join(format!("{stem}.f64"));
    let mut bytes = Vec::new();
    std::fs::File::open(&bin)
        .map_err(|e| invalid(format!("cannot read {}: {e}", bin.display())))?
        .read_to_end(&mut bytes)
        .map_err(|e| invalid(format!("read failed: {e}")))?;
    if sha256_hex(&bytes) != manifest.data_sha256 {
        return Err(invalid(format!(
            "payload of {} does not match its manifest hash",
            bin.display()
        )));
    }
    let per: usize = manifest.shape[1..].iter().product();
    let total = manifest.shape[0] * per;
    if bytes.len() != total * 8 {
        return Err(invalid("realization payload has the wrong length"));
    }
    let mut fields = Vec::with_capacity(manifest.shape[0]);
    let mut chunk = bytes.chunks_exact(8);
    for _ in 0..manifest.shape[0] {
        let mut field = Vec::with_capacity(per);
        for _ in 0..per {
            let b: [u8; 8] = chunk.next().unwrap().try_into().unwrap();
            field.push(f64::from_le_bytes(b));
        }
        fields.push(field);
    }
    Ok((manifest, fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_configs_reject_unknown_keys_and_build_builtins() {
        let cfg: DensityConfig =
            serde_json::from_str(r#"{"builtin": "ar1", "params": {"phi": 0.5}}"#).unwrap();
        let s = cfg.build().unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.eval(&[0.0]) > 0.0);

        let bad = serde_json::from_str::<DensityConfig>(
            r#"{"builtin": "ar1", "params": {"phi": 0.5}, "extra": 1}"#,
        );
        assert!(bad.is_err());

        let ambiguous: DensityConfig = serde_json::from_str(
            r#"{"builtin": "ar1", "expression": "1 + u1^2", "params": {"phi": 0.5}}"#,
        )
        .unwrap();
        assert!(ambiguous.build().is_err());
    }

    #[test]
    fn expression_densities_evaluate() {
        let cfg: DensityConfig = serde_json::from_str(
            r#"{
                "expression": "(u1 - u2)^2",
                "domain": {"kind": "euclidean", "d": 2},
                "zeros": [{"location": [0.0, 0.0], "order": 0}]
            }"#,
        )
        .unwrap();
        let s = cfg.build().unwrap();
        assert_eq!(s.dim(), 2);
        assert!((s.eval(&[1.0, 0.25]) - 0.5625).abs() < 1e-15);
        assert_eq!(s.eval(&[0.3, 0.3]), 0.0);
    }

    #[test]
    fn covariance_csv_round_trips() {
        let dir = std::env::temp_dir().join("rigidity_io_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let cov = CovarianceSequence::new(
            2,
            vec![
                (vec![0, 0], 1.0),
                (vec![1, 0], 0.25),
                (vec![0, 1], -0.125),
            ],
            TailSpec::Finite,
        )
        .unwrap();
        let path = dir.join("cov.csv");
        write_covariance_csv(&path, &cov).unwrap();
        let back = read_covariance_csv(&path, TailSpec::Finite).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.value(&[1, 0]), 0.25);
        assert_eq!(back.value(&[-1, 0]), 0.25);
        assert_eq!(back.value(&[0, -1]), -0.125);
        assert_eq!(back.value(&[2, 2]), 0.0);
    }

    #[test]
    fn realization_dumps_verify_their_hash() {
        let dir = std::env::temp_dir().join("rigidity_io_dump_test");
        std::fs::create_dir_all(&dir).unwrap();
        let fields = vec![vec![1.0, -2.5, 3.25, 0.0], vec![0.5, 0.5, -0.5, 4.0]];
        let spec = serde_json::json!({"grid": 4, "seed": 9});
        let manifest = write_realizations(&dir, "dump", &spec, &fields, &[4], 9).unwrap();
        assert_eq!(manifest.shape, vec![2, 4]);
        let (back_manifest, back) = read_realizations(&dir, "dump").unwrap();
        assert_eq!(back, fields);
        assert_eq!(back_manifest.data_sha256, manifest.data_sha256);

        // Corrupt one byte: the hash check must fail.
        let bin = dir.join("dump.f64");
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes[3] ^= 0xff;
        std::fs::write(&bin, bytes).unwrap();
        assert!(read_realizations(&dir, "dump").is_err());
    }

    #[test]
    fn covariance_configs_build_from_each_source() {
        let filter: CovarianceConfig = serde_json::from_str(
            r#"{"filter": [{"offset": [0], "weight": 1.0}, {"offset": [1], "weight": -1.0}]}"#,
        )
        .unwrap();
        let cov = filter.build(Path::new(".")).unwrap();
        assert_eq!(cov.value(&[0]), 2.0);
        assert_eq!(cov.value(&[1]), -1.0);

        let builtin: CovarianceConfig =
            serde_json::from_str(r#"{"builtin": "ar1", "params": {"phi": 0.3}}"#).unwrap();
        let cov = builtin.build(Path::new(".")).unwrap();
        assert!((cov.value(&[2]) - 0.09).abs() < 1e-12);

        let none: CovarianceConfig = serde_json::from_str("{}").unwrap();
        assert!(none.build(Path::new(".")).is_err());
    }
}
