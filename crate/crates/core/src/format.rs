//! On-disk formats: instances as JSON, flip traces as CSV, search reports as JSON.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{GeneratorError, Instance, Provenance};
use crate::geometry::{PointSet, Segment};
use crate::matching::{crossing_count, replay, CrossingPair, EngineError, FlipChoice, FlipRecord, FlipTrace, Matching};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV")]
    Csv(#[from] csv::Error),
    #[error("invalid instance")]
    Instance(#[from] GeneratorError),
    #[error("invalid trace")]
    Trace(#[from] EngineError),
    #[error("{0}")]
    Invalid(String),
}

/// JSON document describing an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub points: Vec<[i64; 2]>,
    pub matching: Vec<[usize; 2]>,
    pub provenance: String,
    #[serde(default)]
    pub notes: String,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            points: inst.points.coords().into_iter().map(|(x, y)| [x, y]).collect(),
            matching: inst.matching.pairs().iter().map(|s| [s.a, s.b]).collect(),
            provenance: inst.provenance.to_string(),
            notes: inst.notes.clone(),
        }
    }
}

impl InstanceFile {
    /// Validates indices, perfectness and general position.
    pub fn into_instance(self) -> Result<Instance, FormatError> {
        let coords: Vec<(i64, i64)> = self.points.iter().map(|p| (p[0], p[1])).collect();
        let points = PointSet::new(&coords).map_err(GeneratorError::from)?;
        let pairs: Vec<(usize, usize)> = self.matching.iter().map(|p| (p[0], p[1])).collect();
        let matching = Matching::new(points.len(), &pairs).map_err(GeneratorError::from)?;
        let provenance = self
            .provenance
            .parse()
            .unwrap_or_else(|_| Provenance::Custom(self.provenance.clone()));
        Ok(Instance::new(points, matching, provenance, self.notes)?)
    }
}

/// Pretty JSON with one point or pair per line.
pub fn instance_to_json(inst: &Instance) -> String {
    let file = InstanceFile::from(inst);
    let rows = |items: Vec<String>| format!("[\n    {}\n  ]", items.join(",\n    "));
    let points = rows(file.points.iter().map(|p| format!("[{}, {}]", p[0], p[1])).collect());
    let matching = rows(file.matching.iter().map(|p| format!("[{}, {}]", p[0], p[1])).collect());
    let json_str = |s: &str| serde_json::to_string(s).expect("strings serialize");
    format!(
        "{{\n  \"points\": {points},\n  \"matching\": {matching},\n  \"provenance\": {},\n  \"notes\": {}\n}}\n",
        json_str(&file.provenance),
        json_str(&file.notes)
    )
}

pub fn instance_from_json(text: &str) -> Result<Instance, FormatError> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

pub const TRACE_HEADER: [&str; 10] = [
    "step",
    "removed_1",
    "removed_2",
    "added_1",
    "added_2",
    "choice",
    "crossings_after",
    "length_after",
    "phi_l_after",
    "phi_k_after",
];

fn opt(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes a trace as CSV. Row 0 describes the initial matching; its
/// potentials come from the first record and are empty for uninstrumented
/// or empty traces.
pub fn trace_to_csv(ps: &PointSet, trace: &FlipTrace) -> Result<String, FormatError> {
    let matchings = trace.matchings(ps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    let first = trace.records.first();
    let initial_len = first.map(|r| r.length_before).unwrap_or_else(|| crate::matching::total_length(ps, &trace.initial));
    w.write_record([
        "0".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        crossing_count(ps, &trace.initial).to_string(),
        initial_len.to_string(),
        opt(first.and_then(|r| r.phi_l_before)),
        opt(first.and_then(|r| r.phi_k_before)),
    ])?;
    for (i, r) in trace.records.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.crossing.e1.to_string(),
            r.crossing.e2.to_string(),
            r.new_e1.to_string(),
            r.new_e2.to_string(),
            r.choice.label().to_string(),
            crossing_count(ps, &matchings[i + 1]).to_string(),
            r.length_after.to_string(),
            opt(r.phi_l_after),
            opt(r.phi_k_after),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Parses a segment written as `i-j`.
pub fn parse_segment(s: &str) -> Result<Segment, FormatError> {
    let bad = || FormatError::Invalid(format!("bad segment {s:?}"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    Segment::new(a, b).map_err(|_| bad())
}

fn parse_opt(s: &str) -> Result<Option<u64>, FormatError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| FormatError::Invalid(format!("bad potential {s:?}")))
}

/// Reads a CSV trace written by [`trace_to_csv`] and replays it from `initial`.
pub fn trace_from_csv(ps: &PointSet, instance_id: &str, initial: &Matching, text: &str) -> Result<FlipTrace, FormatError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(FormatError::Invalid(format!("unexpected trace header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut records = Vec::new();
    let mut prev: Option<(f64, Option<u64>, Option<u64>)> = None;
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let step: usize = row[0].parse().map_err(|_| FormatError::Invalid(format!("bad step {:?}", &row[0])))?;
        if step != i {
            return Err(FormatError::Invalid(format!("row {i} has step {step}")));
        }
        let length: f64 = row[7].parse().map_err(|_| FormatError::Invalid(format!("bad length {:?}", &row[7])))?;
        let phi_l = parse_opt(&row[8])?;
        let phi_k = parse_opt(&row[9])?;
        if let Some((length_before, phi_l_before, phi_k_before)) = prev {
            let choice = FlipChoice::from_label(&row[5]).ok_or_else(|| FormatError::Invalid(format!("bad choice {:?}", &row[5])))?;
            records.push(FlipRecord {
                crossing: CrossingPair::new(parse_segment(&row[1])?, parse_segment(&row[2])?),
                choice,
                new_e1: parse_segment(&row[3])?,
                new_e2: parse_segment(&row[4])?,
                length_before,
                length_after: length,
                phi_l_before: phi_l_before.filter(|_| phi_l.is_some()),
                phi_l_after: phi_l,
                phi_k_before: phi_k_before.filter(|_| phi_k.is_some()),
                phi_k_after: phi_k,
            });
        }
        prev = Some((length, phi_l, phi_k));
    }
    if prev.is_none() {
        return Err(FormatError::Invalid("trace has no initial row".into()));
    }
    let final_matching = replay(ps, initial, &records)?;
    Ok(FlipTrace { instance_id: instance_id.to_string(), initial: initial.clone(), records, final_matching })
}

/// JSON search report. Absent values were not requested.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<usize>,
    /// Proven lower bound on `f` when the longest search hit its limits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_lower_bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_hat: Option<usize>,
    /// Witness of `f`, or of `h` when only `h` was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_trace_h: Option<String>,
    pub limits_hit: bool,
    pub states_expanded: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_convex, gen_random, BBox};
    use crate::search::{run_strategy, Strategy};

    #[test]
    fn instance_round_trip() {
        let inst = gen_random(3, 7, BBox::square(0, 100)).unwrap();
        let text = instance_to_json(&inst);
        assert_eq!(instance_from_json(&text).unwrap(), inst);
        assert_eq!(instance_to_json(&instance_from_json(&text).unwrap()), text);
    }

    #[test]
    fn instance_load_validates() {
        let collinear = r#"{"points":[[0,0],[1,1],[2,2],[5,0]],"matching":[[0,1],[2,3]],"provenance":"custom:x","notes":""}"#;
        assert!(matches!(instance_from_json(collinear), Err(FormatError::Instance(GeneratorError::NotGeneralPosition(_)))));
        let bad_index = r#"{"points":[[0,0],[1,3],[2,2],[5,0]],"matching":[[0,1],[2,4]],"provenance":"custom:x"}"#;
        assert!(instance_from_json(bad_index).is_err());
        let not_perfect = r#"{"points":[[0,0],[1,3],[2,2],[5,0]],"matching":[[0,1]],"provenance":"custom:x"}"#;
        assert!(instance_from_json(not_perfect).is_err());
        assert!(matches!(instance_from_json("{"), Err(FormatError::Json(_))));
    }

    #[test]
    fn trace_round_trip() {
        let inst = gen_convex(4).unwrap();
        let trace = run_strategy(&inst, Strategy::GreedyX, 100, true).unwrap();
        let csv = trace_to_csv(&inst.points, &trace).unwrap();
        assert!(csv.starts_with("step,removed_1,removed_2,added_1,added_2,choice,crossings_after,length_after,phi_l_after,phi_k_after\n0,,,,,,3,"));
        let back = trace_from_csv(&inst.points, &trace.instance_id, &inst.matching, &csv).unwrap();
        assert_eq!(back, trace);
        let last = csv.lines().last().unwrap();
        assert_eq!(last.split(',').nth(6), Some("0"));
    }

    #[test]
    fn uninstrumented_potentials_are_empty() {
        let inst = gen_convex(3).unwrap();
        let trace = run_strategy(&inst, Strategy::FirstCrossing, 100, false).unwrap();
        let csv = trace_to_csv(&inst.points, &trace).unwrap();
        let row1: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row1[8], "");
        // Gap-line potential is always recorded when x is distinct.
        assert!(!row1[9].is_empty());
    }

    #[test]
    fn report_omits_absent_values() {
        let r = ReportFile { h: Some(3), states_expanded: 12, ..Default::default() };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v, serde_json::json!({"h": 3, "limits_hit": false, "states_expanded": 12}));
    }
}
