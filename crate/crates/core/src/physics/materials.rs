//! Material catalog.
//!
//! The built-in rows are the crystalline source materials considered for
//! levitated-particle tests: atomic mass in u, bulk density in g cm⁻³ and the
//! Gaussian localisation width σ of each atom in pm. Further materials can be
//! loaded from a plain-text file with one record per line:
//!
//! ```text
//! # comments and blank lines are ignored
//! name=Osmium m_atom_u=190.23 density_g_cm3=22.57 sigma_pm=2.77
//! ```
//!
//! Fields may be separated by whitespace or commas. All four keys are
//! required and unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::constants::AMU;
use crate::error::{Error, Result};
use crate::kernels;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub name: String,
    /// Atomic mass, u.
    pub m_atom_u: f64,
    /// Bulk density, g cm⁻³.
    pub density_g_cm3: f64,
    /// Atomic localisation width σ, pm.
    pub sigma_pm: f64,
}

impl MaterialRecord {
    pub fn new(name: &str, m_atom_u: f64, density_g_cm3: f64, sigma_pm: f64) -> Result<Self> {
        let name = name.trim();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',' || c == '=') {
            return Err(Error::invalid(format!("invalid material name `{name}`")));
        }
        for (what, v) in [
            ("m_atom_u", m_atom_u),
            ("density_g_cm3", density_g_cm3),
            ("sigma_pm", sigma_pm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name}: {what} must be positive, got {v}")));
            }
        }
        Ok(Self {
            name: name.to_string(),
            m_atom_u,
            density_g_cm3,
            sigma_pm,
        })
    }

    pub fn m_atom_kg(&self) -> f64 {
        self.m_atom_u * AMU
    }

    pub fn sigma_m(&self) -> f64 {
        self.sigma_pm * 1e-12
    }

    pub fn density_kg_m3(&self) -> f64 {
        self.density_g_cm3 * 1e3
    }

    /// Radius of a homogeneous sphere of this material with total mass `mass` (kg).
    pub fn sphere_radius(&self, mass: f64) -> f64 {
        (3.0 * mass / (4.0 * std::f64::consts::PI * self.density_kg_m3())).cbrt()
    }

    /// ω_SN² in s⁻² for this material.
    pub fn omega_sn_squared(&self) -> f64 {
        kernels::omega_sn(self.m_atom_kg(), self.sigma_m()).powi(2)
    }
}

fn builtin_rows() -> Vec<MaterialRecord> {
    let row = |name: &str, m: f64, rho: f64, sigma: f64| MaterialRecord {
        name: name.to_string(),
        m_atom_u: m,
        density_g_cm3: rho,
        sigma_pm: sigma,
    };
    vec![
        row("Silicon", 28.086, 2.329, 6.96),
        row("Tungsten", 183.84, 19.30, 3.48),
        row("Osmium", 190.23, 22.57, 2.77),
        row("Gold", 196.97, 19.32, 4.66),
    ]
}

/// The built-in rows plus any user-supplied extensions.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialCatalog {
    records: Vec<MaterialRecord>,
}

impl Default for MaterialCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl MaterialCatalog {
    pub fn builtin() -> Self {
        Self {
            records: builtin_rows(),
        }
    }

    pub fn empty() -> Self {
        Self {
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[MaterialRecord] {
        &self.records
    }

    pub fn names(&self) -> Vec<String> {
        self.records.iter().map(|r| r.name.clone()).collect()
    }

    /// Case-insensitive lookup.
    pub fn lookup(&self, name: &str) -> Result<&MaterialRecord> {
        let key = name.trim();
        self.records
            .iter()
            .find(|r| r.name.eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::UnknownMaterial {
                name: key.to_string(),
                available: self.names(),
            })
    }

    /// Adds a record, replacing an existing one with the same (case-insensitive) name.
    pub fn insert(&mut self, record: MaterialRecord) {
        match self
            .records
            .iter_mut()
            .find(|r| r.name.eq_ignore_ascii_case(&record.name))
        {
            Some(slot) => *slot = record,
            None => self.records.push(record),
        }
    }

    pub fn extend_from_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for record in parse_records(text, source_name)? {
            self.insert(record);
        }
        Ok(())
    }

    pub fn extend_from_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.extend_from_text(&text, &path.display().to_string())
    }

    /// Serializes in the same line format [`extend_from_text`](Self::extend_from_text)
    /// reads. Values use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "name={} m_atom_u={} density_g_cm3={} sigma_pm={}",
                r.name, r.m_atom_u, r.density_g_cm3, r.sigma_pm
            );
        }
        out
    }
}

/// Looks a material up in the built-in catalog.
pub fn material_lookup(name: &str) -> Result<MaterialRecord> {
    MaterialCatalog::builtin().lookup(name).cloned()
}

fn parse_records(text: &str, source_name: &str) -> Result<Vec<MaterialRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let mut name = None;
        let mut fields = [None::<f64>; 3];
        for token in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{token}`")))?;
            let slot = match key.trim() {
                "name" => {
                    name = Some(value.trim().to_string());
                    continue;
                }
                "m_atom_u" => 0,
                "density_g_cm3" => 1,
                "sigma_pm" => 2,
                other => return Err(err(format!("unknown key `{other}`"))),
            };
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("`{key}` is not a number: `{value}`")))?;
            fields[slot] = Some(v);
        }
        let name = name.ok_or_else(|| err("missing `name`".into()))?;
        let [Some(m), Some(rho), Some(sigma)] = fields else {
            return Err(err(format!(
                "record `{name}` needs m_atom_u, density_g_cm3 and sigma_pm"
            )));
        };
        out.push(MaterialRecord::new(&name, m, rho, sigma).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}
