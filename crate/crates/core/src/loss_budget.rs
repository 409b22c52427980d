//! Loss budget of the irradiation injection path and countermeasure
//! margins.
//!
//! Losses are additive in dB. Entries measured against an instrument floor
//! are lower bounds, and any lower bound in a sum makes the total one too.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shipped component database.
pub const BUILTIN_DB: &str = include_str!("../data/components.toml");

/// A loss in dB, possibly only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Loss {
    pub db: f64,
    pub lower_bound: bool,
}

impl Loss {
    pub fn exact(db: f64) -> Self {
        Self {
            db,
            lower_bound: false,
        }
    }

    pub fn at_least(db: f64) -> Self {
        Self {
            db,
            lower_bound: true,
        }
    }
}

impl std::ops::Add for Loss {
    type Output = Loss;

    fn add(self, rhs: Loss) -> Loss {
        Loss {
            db: self.db + rhs.db,
            lower_bound: self.lower_bound || rhs.lower_bound,
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lower_bound {
            write!(f, ">{}", self.db)
        } else {
            write!(f, "{}", self.db)
        }
    }
}

/// On-disk form: a number, or a string like `">78"`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RawLoss {
    Exact(f64),
    Text(String),
}

impl RawLoss {
    fn parse(&self, key: &str) -> Result<Loss> {
        let loss = match self {
            RawLoss::Exact(v) => Loss::exact(*v),
            RawLoss::Text(s) => {
                let t = s.trim();
                let (bound, num) = match t.strip_prefix('>') {
                    Some(rest) => (true, rest.trim()),
                    None => (false, t),
                };
                let db: f64 = num.parse().map_err(|_| {
                    Error::config(key, format!("expected a number or \">N\", got `{s}`"))
                })?;
                Loss {
                    db,
                    lower_bound: bound,
                }
            }
        };
        if !(loss.db >= 0.0 && loss.db.is_finite()) {
            return Err(Error::config(key, "loss must be >= 0 dB"));
        }
        Ok(loss)
    }
}

fn parse_table(raw: &BTreeMap<String, RawLoss>, prefix: &str) -> Result<BTreeMap<u32, Loss>> {
    raw.iter()
        .map(|(wl, v)| {
            let key = format!("{prefix}.{wl}");
            let nm: u32 = wl
                .parse()
                .map_err(|_| Error::config(&key, "wavelength keys must be integers in nm"))?;
            Ok((nm, v.parse(&key)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLoss {
    pub name: String,
    pub loss_db: BTreeMap<u32, Loss>,
}

impl ComponentLoss {
    pub fn at(&self, wavelength_nm: u32) -> Result<Loss> {
        self.loss_db
            .get(&wavelength_nm)
            .copied()
            .ok_or_else(|| Error::MissingWavelength {
                component: self.name.clone(),
                wavelength_nm,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InjectionPath {
    pub fiber_length_km: f64,
    pub fiber_loss_db_per_km: BTreeMap<u32, Loss>,
    pub components: Vec<ComponentLoss>,
}

impl InjectionPath {
    /// Path `a` followed by path `b`.
    pub fn concat(&self, other: &InjectionPath) -> Result<InjectionPath> {
        if self.fiber_length_km > 0.0
            && other.fiber_length_km > 0.0
            && self.fiber_loss_db_per_km != other.fiber_loss_db_per_km
        {
            return Err(Error::domain(
                "cannot join paths with different fiber types",
            ));
        }
        let fiber = if self.fiber_length_km > 0.0 {
            &self.fiber_loss_db_per_km
        } else {
            &other.fiber_loss_db_per_km
        };
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(InjectionPath {
            fiber_length_km: self.fiber_length_km + other.fiber_length_km,
            fiber_loss_db_per_km: fiber.clone(),
            components,
        })
    }
}

/// Total loss of `path` at `wavelength_nm`.
pub fn path_loss(path: &InjectionPath, wavelength_nm: u32) -> Result<Loss> {
    if !(path.fiber_length_km >= 0.0 && path.fiber_length_km.is_finite()) {
        return Err(Error::domain("fiber length must be >= 0"));
    }
    let mut total = Loss::default();
    if path.fiber_length_km > 0.0 {
        let per_km = path
            .fiber_loss_db_per_km
            .get(&wavelength_nm)
            .copied()
            .ok_or_else(|| Error::MissingWavelength {
                component: "fiber".into(),
                wavelength_nm,
            })?;
        total = total
            + Loss {
                db: per_km.db * path.fiber_length_km,
                lower_bound: per_km.lower_bound,
            };
    }
    for c in &path.components {
        total = total + c.at(wavelength_nm)?;
    }
    Ok(total)
}

/// A power in watts, possibly only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    pub watts: f64,
    pub lower_bound: bool,
}

/// Power Eve must launch for `target_w` to reach the device.
pub fn required_eve_power(
    path: &InjectionPath,
    wavelength_nm: u32,
    target_w: f64,
) -> Result<Power> {
    if !(target_w > 0.0 && target_w.is_finite()) {
        return Err(Error::domain("target power must be > 0"));
    }
    let loss = path_loss(path, wavelength_nm)?;
    Ok(Power {
        watts: target_w * 10f64.powf(loss.db / 10.0),
        lower_bound: loss.lower_bound,
    })
}

/// Power reaching the device when Eve launches `launched_w`.
pub fn delivered_power(path: &InjectionPath, wavelength_nm: u32, launched_w: f64) -> Result<f64> {
    let loss = path_loss(path, wavelength_nm)?;
    Ok(launched_w * 10f64.powf(-loss.db / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Eve can deliver the target power.
    Feasible,
    Infeasible,
    /// Loss exactly equals the available headroom; counted as infeasible.
    BoundaryInfeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::BoundaryInfeasible => "boundary_infeasible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub loss: Loss,
    /// `10 log10(eve_max / target)`, dB.
    pub headroom_db: f64,
    /// `loss - headroom`, dB. A lower bound when the loss is.
    pub margin_db: f64,
    pub verdict: Verdict,
}

/// Isolation margin of `path` against an attacker limited to `eve_max_w`.
///
/// With a lower-bound loss the verdict is taken at the bound: an
/// infeasible verdict then holds for the true loss as well, while a
/// feasible one is the attacker-favourable reading.
pub fn countermeasure_margin(
    path: &InjectionPath,
    wavelength_nm: u32,
    eve_max_w: f64,
    target_w: f64,
) -> Result<Margin> {
    if !(eve_max_w > 0.0 && target_w > 0.0 && eve_max_w.is_finite() && target_w.is_finite()) {
        return Err(Error::domain("powers must be > 0"));
    }
    let loss = path_loss(path, wavelength_nm)?;
    let headroom_db = 10.0 * (eve_max_w / target_w).log10();
    let margin_db = loss.db - headroom_db;
    let verdict = if margin_db < 0.0 {
        Verdict::Feasible
    } else if margin_db == 0.0 {
        Verdict::BoundaryInfeasible
    } else {
        Verdict::Infeasible
    };
    Ok(Margin {
        loss,
        headroom_db,
        margin_db,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingScheme {
    pub name: String,
    pub description: String,
    pub signal_loss_1550_db: f64,
    pub irradiation_loss_405_db: f64,
    pub split_ratio_405: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiber {
    #[serde(default)]
    description: String,
    loss_db_per_km: BTreeMap<String, RawLoss>,
}

/// Component entry as written in a database or config file.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawComponent {
    #[serde(default)]
    pub description: String,
    pub loss_db: BTreeMap<String, RawLoss>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    #[serde(default)]
    description: String,
    signal_loss_1550_db: f64,
    irradiation_loss_405_db: f64,
    split_ratio_405: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawDb {
    #[serde(default)]
    fibers: BTreeMap<String, RawFiber>,
    #[serde(default)]
    pub(crate) components: BTreeMap<String, RawComponent>,
    #[serde(default)]
    schemes: BTreeMap<String, RawScheme>,
}

/// Fibers, components and coupling schemes by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentDb {
    pub fibers: BTreeMap<String, BTreeMap<u32, Loss>>,
    pub components: BTreeMap<String, ComponentLoss>,
    pub schemes: BTreeMap<String, CouplingScheme>,
    pub descriptions: BTreeMap<String, String>,
}

impl ComponentDb {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_DB).expect("shipped component database parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawDb =
            toml::from_str(text).map_err(|e| Error::config("components", e.to_string()))?;
        Self::from_raw(raw, "")
    }

    pub(crate) fn from_raw(raw: RawDb, prefix: &str) -> Result<Self> {
        let mut db = ComponentDb::default();
        for (name, f) in raw.fibers {
            let table = parse_table(
                &f.loss_db_per_km,
                &format!("{prefix}fibers.{name}.loss_db_per_km"),
            )?;
            db.descriptions
                .insert(format!("fiber:{name}"), f.description);
            db.fibers.insert(name, table);
        }
        for (name, c) in raw.components {
            let table = parse_table(&c.loss_db, &format!("{prefix}components.{name}.loss_db"))?;
            db.descriptions
                .insert(format!("component:{name}"), c.description);
            db.components.insert(
                name.clone(),
                ComponentLoss {
                    name,
                    loss_db: table,
                },
            );
        }
        for (name, s) in raw.schemes {
            for (k, v) in [
                ("signal_loss_1550_db", s.signal_loss_1550_db),
                ("irradiation_loss_405_db", s.irradiation_loss_405_db),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(
                        format!("{prefix}schemes.{name}.{k}"),
                        "must be >= 0 dB",
                    ));
                }
            }
            db.schemes.insert(
                name.clone(),
                CouplingScheme {
                    name,
                    description: s.description,
                    signal_loss_1550_db: s.signal_loss_1550_db,
                    irradiation_loss_405_db: s.irradiation_loss_405_db,
                    split_ratio_405: s.split_ratio_405,
                },
            );
        }
        Ok(db)
    }

    /// Add or replace components from config entries; errors are keyed
    /// under `prefix`.
    pub fn add_components(
        &mut self,
        entries: &BTreeMap<String, RawComponent>,
        prefix: &str,
    ) -> Result<()> {
        let raw = RawDb {
            components: entries.clone(),
            ..Default::default()
        };
        let extra = Self::from_raw(raw, prefix)?;
        self.merge(extra);
        Ok(())
    }

    /// Add or replace entries from `other`.
    pub fn merge(&mut self, other: ComponentDb) {
        self.fibers.extend(other.fibers);
        self.components.extend(other.components);
        self.schemes.extend(other.schemes);
        self.descriptions.extend(other.descriptions);
    }

    pub fn component(&self, name: &str) -> Result<&ComponentLoss> {
        self.components
            .get(name)
            .ok_or_else(|| Error::UnknownComponent(name.into()))
    }

    pub fn fiber(&self, name: &str) -> Result<&BTreeMap<u32, Loss>> {
        self.fibers
            .get(name)
            .ok_or_else(|| Error::UnknownComponent(format!("fiber {name}")))
    }

    /// `(signal loss at 1550 nm, irradiation loss at 405 nm)` of a scheme.
    pub fn coupling_plan_loss(&self, scheme: &str) -> Result<(f64, f64)> {
        let s = self
            .schemes
            .get(scheme)
            .ok_or_else(|| Error::UnknownScheme(scheme.into()))?;
        Ok((s.signal_loss_1550_db, s.irradiation_loss_405_db))
    }

    /// Path through `fiber_length_km` of `fiber` followed by the named
    /// components.
    pub fn path(
        &self,
        fiber: &str,
        fiber_length_km: f64,
        components: &[impl AsRef<str>],
    ) -> Result<InjectionPath> {
        let fiber_loss_db_per_km = if fiber_length_km > 0.0 {
            self.fiber(fiber)?.clone()
        } else {
            BTreeMap::new()
        };
        let components = components
            .iter()
            .map(|c| self.component(c.as_ref()).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(InjectionPath {
            fiber_length_km,
            fiber_loss_db_per_km,
            components,
        })
    }
}
