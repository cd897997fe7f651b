//! CSV formats for assignments, enrolment records, intake schedules and
//! projection exports.
//!
//! Probabilities and populations are written with the shortest decimal text
//! that parses back to the same `f64`, so write -> read -> write is stable.

use std::collections::BTreeMap;

use crate::curriculum::ModuleCode;
use crate::graph::{EnrollmentState, Outcome, StateGraph};
use crate::markov::{
    CohortSchedule, EnrollmentRecord, ModuleLoads, ModuleOutcome, PopulationVector,
    ProbabilityAssignment,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: u64,
    pub message: String,
}

impl FormatError {
    fn new(line: u64, message: impl Into<String>) -> Self {
        FormatError {
            line,
            message: message.into(),
        }
    }
}

pub const ASSIGNMENT_HEADER: [&str; 4] = [
    "from_state_id",
    "outcome",
    "target_selection",
    "probability",
];
pub const RECORDS_HEADER: [&str; 4] = ["student_id", "academic_year", "module_code", "outcome"];
pub const INTAKES_HEADER: [&str; 2] = ["year", "intake"];

fn rows<'a>(
    text: &'a str,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord), FormatError>> + 'a, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let found = rdr
        .headers()
        .map_err(|e| FormatError::new(1, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(FormatError::new(
            1,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(rdr.into_records().map(|r| {
        let r = r.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            FormatError::new(line, e.to_string())
        })?;
        let line = r.position().map(|p| p.line()).unwrap_or(0);
        Ok((line, r))
    }))
}

fn number<T: std::str::FromStr>(line: u64, field: &str, what: &str) -> Result<T, FormatError> {
    field
        .parse()
        .map_err(|_| FormatError::new(line, format!("invalid {what} {field:?}")))
}

pub fn read_assignment(text: &str) -> Result<ProbabilityAssignment, FormatError> {
    let mut a = ProbabilityAssignment::new();
    let mut seen = std::collections::BTreeSet::new();
    for row in rows(text, &ASSIGNMENT_HEADER)? {
        let (line, r) = row?;
        let state: EnrollmentState = r[0]
            .parse()
            .map_err(|e: crate::graph::StateIdError| FormatError::new(line, e.to_string()))?;
        let outcome = Outcome::parse(&r[1], &r[2]).ok_or_else(|| {
            FormatError::new(line, format!("invalid outcome {:?} / {:?}", &r[1], &r[2]))
        })?;
        let p: f64 = number(line, &r[3], "probability")?;
        if !seen.insert((state.clone(), outcome.clone())) {
            return Err(FormatError::new(
                line,
                format!("duplicate entry {state} {outcome}"),
            ));
        }
        a.set(state, outcome, p);
    }
    Ok(a)
}

pub fn write_assignment(a: &ProbabilityAssignment) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ASSIGNMENT_HEADER).unwrap();
    for (s, o, p) in a.entries() {
        let sel = o.selection().map(|d| d.joined(";")).unwrap_or_default();
        w.write_record([s.id(), o.kind().to_string(), sel, p.to_string()])
            .unwrap();
    }
    finish(w)
}

/// One row per student, year and module; rows are grouped into records.
pub fn read_records(text: &str) -> Result<Vec<EnrollmentRecord>, FormatError> {
    let mut grouped: BTreeMap<(String, i32), BTreeMap<ModuleCode, ModuleOutcome>> = BTreeMap::new();
    for row in rows(text, &RECORDS_HEADER)? {
        let (line, r) = row?;
        if r[0].is_empty() {
            return Err(FormatError::new(line, "empty student id"));
        }
        let year: i32 = number(line, &r[1], "academic year")?;
        let code = ModuleCode::new(&r[2]);
        if !code.is_well_formed() {
            return Err(FormatError::new(
                line,
                format!("invalid module code {:?}", &r[2]),
            ));
        }
        let outcome: ModuleOutcome = r[3].parse().map_err(|e| FormatError::new(line, e))?;
        let modules = grouped.entry((r[0].to_string(), year)).or_default();
        if modules.insert(code.clone(), outcome).is_some() {
            return Err(FormatError::new(
                line,
                format!("duplicate row for {} {year} {code}", &r[0]),
            ));
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((student, academic_year), outcomes)| EnrollmentRecord {
            student,
            academic_year,
            outcomes,
        })
        .collect())
}

pub fn write_records(records: &[EnrollmentRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORDS_HEADER).unwrap();
    for r in records {
        for (m, o) in &r.outcomes {
            w.write_record([
                r.student.as_str(),
                &r.academic_year.to_string(),
                m.as_str(),
                o.as_str(),
            ])
            .unwrap();
        }
    }
    finish(w)
}

pub fn read_intakes(text: &str) -> Result<CohortSchedule, FormatError> {
    let mut s = CohortSchedule::default();
    for row in rows(text, &INTAKES_HEADER)? {
        let (line, r) = row?;
        let year: i32 = number(line, &r[0], "year")?;
        let intake: f64 = number(line, &r[1], "intake")?;
        if !(intake.is_finite() && intake >= 0.0) {
            return Err(FormatError::new(line, format!("negative intake {intake}")));
        }
        if s.intakes.insert(year, intake).is_some() {
            return Err(FormatError::new(line, format!("duplicate year {year}")));
        }
    }
    Ok(s)
}

pub fn write_intakes(s: &CohortSchedule) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(INTAKES_HEADER).unwrap();
    for (y, x) in &s.intakes {
        w.write_record([y.to_string(), x.to_string()]).unwrap();
    }
    finish(w)
}

/// `year,state_id,population`, states in canonical order.
pub fn write_populations(vectors: &[PopulationVector], g: &StateGraph) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["year", "state_id", "population"]).unwrap();
    for v in vectors {
        for (s, x) in g.states().iter().zip(&v.values) {
            w.write_record([v.year.to_string(), s.id(), x.to_string()])
                .unwrap();
        }
    }
    finish(w)
}

/// `year,module_code,load`.
pub fn write_loads(loads: &[ModuleLoads]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["year", "module_code", "load"]).unwrap();
    for l in loads {
        for (m, x) in &l.loads {
            w.write_record([l.year.to_string(), m.to_string(), x.to_string()])
                .unwrap();
        }
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}
