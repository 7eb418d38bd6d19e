//! Scenario files: flat `key = value` lines, `#` comments.
//!
//! ```text
//! mesh = box 16 2 2 8 1 1      # or: mesh = file path/to/input.mesh
//! indicator = moving_peak      # uniform | moving_peak (default uniform)
//! steps = 50
//! refine_fraction = 0.05       # default 0
//! coarsen_fraction = 0.02      # default 0
//! p = 8
//! method = rtk                 # rtk | morton | hilbert
//! mode = preserve              # preserve | stretch (default preserve)
//! order = 21                   # default 21
//! k = 4                        # default 4
//! seed = 0                     # default 0
//! ```

use std::path::PathBuf;

use tetpart::harness::{IndicatorKind, MeshSource, PartitionMethod, Scenario};
use tetpart::sfc::NormalizeMode;
use tetpart::Error;

fn bad(msg: String) -> Error {
    Error::Scenario(msg)
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, Error> {
    raw.parse()
        .map_err(|_| bad(format!("cannot parse value `{raw}` for key `{key}`")))
}

fn parse_mesh(raw: &str) -> Result<MeshSource, Error> {
    let fields: Vec<&str> = raw.split_whitespace().collect();
    match fields.as_slice() {
        ["box", rest @ ..] if rest.len() == 6 => Ok(MeshSource::Box {
            nx: parse_value("mesh", rest[0])?,
            ny: parse_value("mesh", rest[1])?,
            nz: parse_value("mesh", rest[2])?,
            dims: (
                parse_value("mesh", rest[3])?,
                parse_value("mesh", rest[4])?,
                parse_value("mesh", rest[5])?,
            ),
        }),
        ["file", path] => Ok(MeshSource::File(PathBuf::from(path))),
        _ => Err(bad(format!(
            "mesh must be `box nx ny nz dx dy dz` or `file <path>`, got `{raw}`"
        ))),
    }
}

pub fn parse(text: &str) -> Result<Scenario, Error> {
    let mut mesh = None;
    let mut indicator = IndicatorKind::Uniform;
    let mut steps = None;
    let mut refine_fraction = 0.0;
    let mut coarsen_fraction = 0.0;
    let mut p = None;
    let mut method = None;
    let mut mode = NormalizeMode::PreserveAspect;
    let mut order = 21;
    let mut k = 4;
    let mut seed = 0;

    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(idx) => &line[..idx],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "mesh" => mesh = Some(parse_mesh(value)?),
            "indicator" => {
                indicator = match value {
                    "uniform" => IndicatorKind::Uniform,
                    "moving_peak" => IndicatorKind::MovingPeak,
                    other => return Err(bad(format!("unknown indicator `{other}`"))),
                }
            }
            "steps" => steps = Some(parse_value(key, value)?),
            "refine_fraction" => refine_fraction = parse_value(key, value)?,
            "coarsen_fraction" => coarsen_fraction = parse_value(key, value)?,
            "p" => p = Some(parse_value(key, value)?),
            "method" => {
                method = Some(match value {
                    "rtk" => PartitionMethod::Rtk,
                    "morton" => PartitionMethod::MortonSfc,
                    "hilbert" => PartitionMethod::HilbertSfc,
                    other => return Err(bad(format!("unknown method `{other}`"))),
                })
            }
            "mode" => {
                mode = match value {
                    "preserve" => NormalizeMode::PreserveAspect,
                    "stretch" => NormalizeMode::StretchToUnit,
                    other => return Err(bad(format!("unknown mode `{other}`"))),
                }
            }
            "order" => order = parse_value(key, value)?,
            "k" => k = parse_value(key, value)?,
            "seed" => seed = parse_value(key, value)?,
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }

    let scenario = Scenario {
        mesh: mesh.ok_or_else(|| bad("missing required key `mesh`".into()))?,
        indicator,
        steps: steps.ok_or_else(|| bad("missing required key `steps`".into()))?,
        refine_fraction,
        coarsen_fraction,
        p: p.ok_or_else(|| bad("missing required key `p`".into()))?,
        method: method.ok_or_else(|| bad("missing required key `method`".into()))?,
        mode,
        order,
        k,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
