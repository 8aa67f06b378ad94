use std::collections::BTreeMap;

use crate::analytic::RickerSource;
use crate::diagnostics::Receiver;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryCondition, DomainKind};

use super::config::*;

pub const PRESETS: [&str; 4] = ["verification-matching", "verification-nonmatching", "scholte", "cavity-demo"];

/// Built-in scenario. `full` selects the full-size cavity setup instead of
/// the scaled one and is ignored by the other presets.
pub fn preset(name: &str, full: bool) -> Result<ScenarioConfig> {
    match name {
        "verification-matching" => Ok(verification(0.1, 0.1, 2)),
        "verification-nonmatching" => Ok(verification(0.1, 0.2, 2)),
        "scholte" => Ok(scholte(3)),
        "cavity-demo" => Ok(if full { cavity_full() } else { cavity_scaled() }),
        _ => Err(Error::config(
            "preset",
            format!("unknown preset `{name}` (available: {})", PRESETS.join(", ")),
        )),
    }
}

fn regions(list: Vec<(u32, RegionConfig)>) -> BTreeMap<String, RegionConfig> {
    list.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Elastic `(-1,0)×(0,1)²` with meshsize `h_e`, acoustic `(0,1)³` with `h_a`.
pub fn verification(h_e: f64, h_a: f64, n: usize) -> ScenarioConfig {
    ScenarioConfig {
        domain: DomainConfig {
            boxes: vec![
                BoxConfig {
                    region: 1,
                    min: [-1.0, 0.0, 0.0],
                    max: [0.0, 1.0, 1.0],
                    subdivisions: None,
                    h: Some(h_e),
                },
                BoxConfig {
                    region: 2,
                    min: [0.0, 0.0, 0.0],
                    max: [1.0, 1.0, 1.0],
                    subdivisions: None,
                    h: Some(h_a),
                },
            ],
            ..Default::default()
        },
        region: regions(vec![
            (1, RegionConfig::elastic(2.7, 6.20, 3.12, n)),
            (2, RegionConfig::acoustic(1.0, 1.0)),
        ]),
        discretization: DiscretizationConfig {
            acoustic_degree: n,
            penalty_alpha: 1.0,
        },
        time: TimeConfig {
            end: 0.1,
            dt: None,
            safety: 0.5,
            dt_max: None,
        },
        boundary: BoundaryConfig::uniform(BoundaryCondition::Dirichlet),
        source: SourceConfig {
            analytic: AnalyticKind::Verification,
            ..Default::default()
        },
        receivers: ReceiversConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Reduced Scholte column `(-1,1)² × (-10,10)`, 300 elements.
pub fn scholte(n: usize) -> ScenarioConfig {
    let mut elastic = RegionConfig::elastic(1.0, 0.0, 0.0, n);
    elastic.c_p = None;
    elastic.c_s = None;
    elastic.lambda = Some(1.0);
    elastic.mu = Some(1.0);
    ScenarioConfig {
        domain: DomainConfig {
            boxes: vec![
                BoxConfig {
                    region: 1,
                    min: [-1.0, -1.0, -10.0],
                    max: [1.0, 1.0, 0.0],
                    subdivisions: Some([5, 5, 6]),
                    h: None,
                },
                BoxConfig {
                    region: 2,
                    min: [-1.0, -1.0, 0.0],
                    max: [1.0, 1.0, 10.0],
                    subdivisions: Some([5, 5, 6]),
                    h: None,
                },
            ],
            ..Default::default()
        },
        region: regions(vec![(1, elastic), (2, RegionConfig::acoustic(1.0, 1.0))]),
        discretization: DiscretizationConfig {
            acoustic_degree: n,
            penalty_alpha: 1.0,
        },
        time: TimeConfig {
            end: 0.1,
            dt: None,
            safety: 0.5,
            dt_max: Some(1e-4),
        },
        boundary: BoundaryConfig::uniform(BoundaryCondition::Dirichlet),
        source: SourceConfig {
            analytic: AnalyticKind::Scholte,
            scholte_omega: Some(1.0),
            ..Default::default()
        },
        receivers: ReceiversConfig::default(),
        output: OutputConfig::default(),
    }
}

fn receiver(name: &str, domain: DomainKind, x: f64, z: f64) -> Receiver {
    Receiver {
        name: name.to_string(),
        domain,
        location: [x, 0.0, z],
    }
}

/// X-shaped monitors on the `xz` plane: elastic points on the diagonals at
/// distances `d` from the centre, acoustic points inside the cavity.
fn monitors(d: &[f64], inner: &[f64]) -> Vec<Receiver> {
    let mut out = Vec::new();
    let names = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L"];
    let mut k = 0;
    for (sx, sz) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        for &s in d {
            out.push(receiver(names[k], DomainKind::Elastic, sx * s, sz * s));
            k += 1;
        }
    }
    out.push(receiver("P0", DomainKind::Acoustic, 0.0, 0.0));
    for (i, &s) in inner.iter().enumerate() {
        out.push(receiver(&format!("P{}", 2 * i + 1), DomainKind::Acoustic, s, s));
        out.push(receiver(&format!("P{}", 2 * i + 2), DomainKind::Acoustic, -s, -s));
    }
    out
}

fn cavity_regions(n: usize) -> BTreeMap<String, RegionConfig> {
    regions(vec![
        (1, RegionConfig::elastic(2700.0, 3000.0, 1734.0, n)),
        (2, RegionConfig::acoustic(1024.0, 300.0)),
    ])
}

/// Quarter-scale cavity: 300 × 300 × 150 m, cube cavity of side 50 m.
fn cavity_scaled() -> ScenarioConfig {
    ScenarioConfig {
        domain: DomainConfig {
            cavity: Some(CavityConfig {
                outer_min: [-150.0, -150.0, -75.0],
                outer_max: [150.0, 150.0, 75.0],
                outer_subdivisions: [12, 12, 6],
                cavity_min: [-25.0; 3],
                cavity_max: [25.0; 3],
                cavity_subdivisions: [8, 8, 8],
                elastic_region: 1,
                acoustic_region: 2,
            }),
            ..Default::default()
        },
        region: cavity_regions(2),
        discretization: DiscretizationConfig {
            acoustic_degree: 2,
            penalty_alpha: 1.0,
        },
        time: TimeConfig {
            end: 0.4,
            dt: None,
            safety: 0.5,
            dt_max: None,
        },
        boundary: BoundaryConfig::uniform(BoundaryCondition::Absorbing),
        source: SourceConfig {
            ricker: vec![RickerSource {
                delay: 0.06,
                location: [50.0, 0.0, 75.0],
                ..RickerSource::cavity(22.0)
            }],
            ..Default::default()
        },
        receivers: ReceiversConfig {
            points: monitors(&[70.0, 50.0, 35.0], &[15.0]),
            every: 1,
        },
        output: OutputConfig {
            dir: None,
            snapshot_every: 0,
            energy_every: 5,
        },
    }
}

/// Full-size setup with a cube cavity of side 80 m.
fn cavity_full() -> ScenarioConfig {
    ScenarioConfig {
        domain: DomainConfig {
            cavity: Some(CavityConfig {
                outer_min: [-600.0, -600.0, -300.0],
                outer_max: [600.0, 600.0, 300.0],
                outer_subdivisions: [60, 60, 30],
                cavity_min: [-40.0; 3],
                cavity_max: [40.0; 3],
                cavity_subdivisions: [16, 16, 16],
                elastic_region: 1,
                acoustic_region: 2,
            }),
            ..Default::default()
        },
        region: cavity_regions(4),
        discretization: DiscretizationConfig {
            acoustic_degree: 4,
            penalty_alpha: 1.0,
        },
        time: TimeConfig {
            end: 0.8,
            dt: Some(1e-5),
            safety: 0.5,
            dt_max: None,
        },
        boundary: BoundaryConfig::uniform(BoundaryCondition::Absorbing),
        source: SourceConfig {
            ricker: vec![RickerSource::cavity(22.0)],
            ..Default::default()
        },
        receivers: ReceiversConfig {
            points: monitors(&[280.0, 200.0, 120.0], &[25.0]),
            every: 100,
        },
        output: OutputConfig {
            dir: None,
            snapshot_every: 10_000,
            energy_every: 1000,
        },
    }
}
