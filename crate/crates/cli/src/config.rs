//! Plain-text key=value configuration with `[section]` headers, plus the
//! experiment settings assembled from it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phlab_core::analytic::AnalyticField;
use phlab_core::grid::{DomainShape, GridDomain};
use phlab_core::profile::OperatorProfile;

/// Parsed `[section]` → key → value map.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("root");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key=value", lineno + 1))?;
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => Ok(Some(
                v.parse()
                    .with_context(|| format!("[{section}] {key} = {v:?} is not a number"))?,
            )),
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => Ok(Some(v.parse().with_context(|| {
                format!("[{section}] {key} = {v:?} is not an integer")
            })?)),
        }
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => Ok(Some(v.parse().with_context(|| {
                format!("[{section}] {key} = {v:?} is not an integer")
            })?)),
        }
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => Ok(Some(parse_f64_list(v)?)),
        }
    }

    pub fn usize_list(&self, section: &str, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    out.push(
                        part.trim()
                            .parse()
                            .with_context(|| format!("bad integer {part:?}"))?,
                    );
                }
                Ok(Some(out))
            }
        }
    }
}

pub fn parse_f64_list(v: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in v.split(',') {
        out.push(
            part.trim()
                .parse()
                .with_context(|| format!("bad number {part:?}"))?,
        );
    }
    Ok(out)
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct CommonSettings {
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl CommonSettings {
    pub fn from_config(
        cfg: &ConfigFile,
        seed_flag: Option<u64>,
        out_flag: Option<PathBuf>,
    ) -> Result<Self> {
        let seed = seed_flag
            .or(cfg.u64("experiment", "seed")?)
            .unwrap_or(42);
        let out_dir = out_flag
            .or_else(|| cfg.get("experiment", "out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { seed, out_dir })
    }
}

/// Domain description from the `[domain]` section.
#[derive(Debug, Clone)]
pub enum DomainSpec {
    Square { origin: [f64; 2], side: f64 },
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], r_inner: f64, r_outer: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DomainSpec {
    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        let kind = cfg.get("domain", "type").unwrap_or("square");
        let pair = |key: &str, default: [f64; 2]| -> Result<[f64; 2]> {
            match cfg.get("domain", key) {
                None => Ok(default),
                Some(v) => {
                    let nums = parse_f64_list(v)?;
                    if nums.len() != 2 {
                        bail!("[domain] {key} needs two numbers");
                    }
                    Ok([nums[0], nums[1]])
                }
            }
        };
        match kind {
            "square" => Ok(DomainSpec::Square {
                origin: pair("origin", [0.0, 0.0])?,
                side: cfg.f64("domain", "side")?.unwrap_or(1.0),
            }),
            "disk" => Ok(DomainSpec::Disk {
                center: pair("center", [0.0, 0.0])?,
                radius: cfg.f64("domain", "radius")?.unwrap_or(1.0),
            }),
            "annulus" => Ok(DomainSpec::Annulus {
                center: pair("center", [0.0, 0.0])?,
                r_inner: cfg.f64("domain", "r_inner")?.unwrap_or(0.25),
                r_outer: cfg.f64("domain", "r_outer")?.unwrap_or(1.0),
            }),
            "polygon" => {
                let raw = cfg
                    .get("domain", "vertices")
                    .context("[domain] polygon needs vertices = x1,y1;x2,y2;...")?;
                let mut vertices = Vec::new();
                for chunk in raw.split(';') {
                    let nums = parse_f64_list(chunk)?;
                    if nums.len() != 2 {
                        bail!("polygon vertex {chunk:?} needs two numbers");
                    }
                    vertices.push([nums[0], nums[1]]);
                }
                if vertices.len() < 3 {
                    bail!("polygon needs at least three vertices");
                }
                Ok(DomainSpec::Polygon { vertices })
            }
            other => bail!("unknown domain type {other:?}"),
        }
    }

    pub fn build(&self, cells: usize) -> Result<GridDomain<f64>> {
        let dom = match self {
            DomainSpec::Square { origin, side } => GridDomain::new(
                DomainShape::Box {
                    origin: [origin[0], origin[1], 0.0],
                    size: [*side, *side, 0.0],
                    dim: 2,
                },
                cells,
            ),
            DomainSpec::Disk { center, radius } => GridDomain::new(
                DomainShape::Disk {
                    center: *center,
                    radius: *radius,
                },
                cells,
            ),
            DomainSpec::Annulus {
                center,
                r_inner,
                r_outer,
            } => GridDomain::new(
                DomainShape::Annulus {
                    center: *center,
                    r_inner: *r_inner,
                    r_outer: *r_outer,
                },
                cells,
            ),
            DomainSpec::Polygon { vertices } => GridDomain::new(
                DomainShape::Polygon {
                    vertices: vertices.clone(),
                },
                cells,
            ),
        };
        dom.map_err(|e| anyhow::anyhow!("building domain: {e}"))
    }
}

/// Profile plus ambient dimension from the `[profile]` section; `p` and
/// `eps` may be comma lists for sweep experiments.
#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub p_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub beta: f64,
    pub n: usize,
}

impl ProfileSpec {
    pub fn from_config(cfg: &ConfigFile, eps_flag: Option<Vec<f64>>) -> Result<Self> {
        let p_list = cfg
            .f64_list("profile", "p")?
            .unwrap_or_else(|| vec![2.0]);
        let eps_list = eps_flag
            .or(cfg.f64_list("profile", "eps")?)
            .unwrap_or_else(|| vec![1e-3]);
        let beta = cfg.f64("profile", "beta")?.unwrap_or(0.0);
        let n = cfg.usize("profile", "n")?.unwrap_or(2);
        // the ε-sequence must decrease strictly
        for w in eps_list.windows(2) {
            if w[1] >= w[0] {
                bail!("eps list must be strictly decreasing, got {eps_list:?}");
            }
        }
        Ok(Self {
            p_list,
            eps_list,
            beta,
            n,
        })
    }

    pub fn profile(&self, p: f64, eps: f64) -> Result<OperatorProfile<f64>> {
        OperatorProfile::new(p, eps, self.beta).map_err(|e| anyhow::anyhow!("profile: {e}"))
    }
}

/// Validated grid-size list (strictly increasing).
pub fn grid_sizes(cfg: &ConfigFile, flag: Option<Vec<usize>>, default: &[usize]) -> Result<Vec<usize>> {
    let sizes = flag
        .or(cfg.usize_list("grid", "sizes")?)
        .unwrap_or_else(|| default.to_vec());
    for w in sizes.windows(2) {
        if w[1] <= w[0] {
            bail!("grid sizes must be strictly increasing, got {sizes:?}");
        }
    }
    Ok(sizes)
}

/// Dirichlet data entry from the `[phi]` section.
pub fn phi_expr(cfg: &ConfigFile, default: AnalyticField) -> Result<AnalyticField> {
    match cfg.get("phi", "name") {
        None => Ok(default),
        Some(name) => AnalyticField::parse(name).map_err(|e| anyhow::anyhow!("phi: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let text = "
[experiment]
seed = 7
out = results # trailing comment

[profile]
p = 1.5, 2, 2.5
eps = 1e-2,1e-3
beta = 0
";
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.u64("experiment", "seed").unwrap(), Some(7));
        assert_eq!(cfg.get("experiment", "out"), Some("results"));
        let spec = ProfileSpec::from_config(&cfg, None).unwrap();
        assert_eq!(spec.p_list, vec![1.5, 2.0, 2.5]);
        assert_eq!(spec.eps_list, vec![1e-2, 1e-3]);
    }

    #[test]
    fn rejects_nondecreasing_eps() {
        let text = "[profile]\neps = 1e-3,1e-2\n";
        let cfg = ConfigFile::parse(text).unwrap();
        assert!(ProfileSpec::from_config(&cfg, None).is_err());
    }

    #[test]
    fn rejects_nonincreasing_grids() {
        let cfg = ConfigFile::parse("[grid]\nsizes = 64,32\n").unwrap();
        assert!(grid_sizes(&cfg, None, &[32]).is_err());
    }

    #[test]
    fn domain_specs_build() {
        let cfg = ConfigFile::parse("[domain]\ntype = disk\nradius = 2\n").unwrap();
        let spec = DomainSpec::from_config(&cfg).unwrap();
        let dom = spec.build(16).unwrap();
        assert_eq!(dom.spacing(), 0.25);

        let cfg =
            ConfigFile::parse("[domain]\ntype = polygon\nvertices = 0,0; 1,0; 1,1; 0,1\n")
                .unwrap();
        let spec = DomainSpec::from_config(&cfg).unwrap();
        assert!(spec.build(8).is_ok());
    }
}
