use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError, ScenarioSet};

#[derive(Serialize, Deserialize)]
struct Row {
    scenario_idx: usize,
    bus_id: String,
    gp: f64,
    gq: f64,
    dp: f64,
    dq: f64,
}

/// One row per (scenario, bus), header `scenario_idx,bus_id,gp,gq,dp,dq`.
pub fn write_csv(s: &ScenarioSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (a, sc) in s.scenarios.iter().enumerate() {
        for (i, b) in s.bus_ids.iter().enumerate() {
            w.serialize(Row {
                scenario_idx: a,
                bus_id: b.clone(),
                gp: sc.gp[i],
                gq: sc.gq[i],
                dp: sc.dp[i],
                dq: sc.dq[i],
            })
            .expect("in-memory csv write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// Parses the CSV form. Scenarios are numbered densely from 0; each must
/// list the same buses as scenario 0, in any order.
pub fn read_csv(text: &str) -> Result<ScenarioSet, ScenarioError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| ScenarioError::Format(e.to_string()))?.clone();
    for col in ["scenario_idx", "bus_id", "gp", "gq", "dp", "dq"] {
        if !headers.iter().any(|h| h == col) {
            return Err(ScenarioError::Format(format!("missing CSV column `{col}`")));
        }
    }
    let mut rows: Vec<Row> = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.map_err(|e| ScenarioError::Format(e.to_string()))?);
    }
    let count = rows.iter().map(|r| r.scenario_idx + 1).max().unwrap_or(0);
    let mut bus_ids: Vec<String> = Vec::new();
    let mut pos: HashMap<String, usize> = HashMap::new();
    for r in rows.iter().filter(|r| r.scenario_idx == 0) {
        if pos.insert(r.bus_id.clone(), bus_ids.len()).is_some() {
            return Err(ScenarioError::Format(format!("bus `{}` repeated in scenario 0", r.bus_id)));
        }
        bus_ids.push(r.bus_id.clone());
    }
    let nb = bus_ids.len();
    let mut scenarios = vec![Scenario::zeros(nb); count];
    let mut seen = vec![vec![false; nb]; count];
    for r in &rows {
        let i = *pos.get(&r.bus_id).ok_or_else(|| {
            ScenarioError::Mismatch(format!("scenario {} lists bus `{}` absent from scenario 0", r.scenario_idx, r.bus_id))
        })?;
        if std::mem::replace(&mut seen[r.scenario_idx][i], true) {
            return Err(ScenarioError::Format(format!(
                "bus `{}` repeated in scenario {}",
                r.bus_id, r.scenario_idx
            )));
        }
        let s = &mut scenarios[r.scenario_idx];
        s.gp[i] = r.gp;
        s.gq[i] = r.gq;
        s.dp[i] = r.dp;
        s.dq[i] = r.dq;
    }
    if let Some(a) = seen.iter().position(|v| v.iter().any(|x| !x)) {
        return Err(ScenarioError::Mismatch(format!("scenario {a} is missing buses")));
    }
    ScenarioSet::new(bus_ids, scenarios, 0, "csv")
}

pub fn write_json(s: &ScenarioSet) -> String {
    serde_json::to_string(s).expect("scenario set serializes")
}

pub fn read_json(text: &str) -> Result<ScenarioSet, ScenarioError> {
    let s: ScenarioSet = serde_json::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
    ScenarioSet::new(s.bus_ids, s.scenarios, s.seed, s.provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScenarioSet {
        let sc = vec![
            Scenario {
                gp: vec![0.1, 0.0],
                gq: vec![0.0, 0.0],
                dp: vec![0.0, 1.0 / 3.0],
                dq: vec![0.0, 0.2],
            },
            Scenario {
                gp: vec![0.2, 0.0],
                gq: vec![0.0, 0.0],
                dp: vec![0.0, 0.5],
                dq: vec![0.0, 0.1],
            },
        ];
        ScenarioSet::new(vec!["A".into(), "B".into()], sc, 3, "t").unwrap()
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let s = sample();
        let text = write_csv(&s);
        assert!(text.starts_with("scenario_idx,bus_id,gp,gq,dp,dq\n"));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.scenarios, s.scenarios);
        assert_eq!(write_csv(&back), text);
    }

    #[test]
    fn json_round_trip() {
        let s = sample();
        assert_eq!(read_json(&write_json(&s)).unwrap(), s);
    }

    #[test]
    fn csv_errors() {
        assert!(read_csv("scenario_idx,bus_id,gp,gq,dp\n0,A,0,0,0\n").is_err());
        assert!(read_csv("scenario_idx,bus_id,gp,gq,dp,dq\n0,A,0,0,0,0\n1,B,0,0,0,0\n").is_err());
        assert!(read_csv("scenario_idx,bus_id,gp,gq,dp,dq\n0,A,0,0,-1,0\n").is_err());
    }
}
