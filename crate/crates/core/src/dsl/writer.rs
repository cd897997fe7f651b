use std::fmt::Write;

use crate::curriculum::Curriculum;

/// Canonical text for `c`: program, sorted modules, sorted pairwise
/// constraints, sorted choice groups, then rules.
///
/// `rule thesis_after` is written only when some module is optional, since
/// otherwise it always equals the module count the parser infers.
pub fn serialize_curriculum(c: &Curriculum) -> String {
    let c = c.canonical();
    let mut out = String::new();
    let name = c.name.replace('\\', "\\\\").replace('"', "\\\"");
    writeln!(out, "program \"{name}\"").unwrap();
    for m in &c.modules {
        write!(
            out,
            "module {} level {} {} year {}",
            m.code,
            m.level,
            if m.compulsory {
                "compulsory"
            } else {
                "optional"
            },
            m.nominal_year
        )
        .unwrap();
        if m.first_marker {
            out.push_str(" first");
        }
        if m.last_marker {
            out.push_str(" last");
        }
        out.push('\n');
    }
    for con in &c.constraints {
        writeln!(out, "constraint {con}").unwrap();
    }
    for g in &c.choice_groups {
        writeln!(
            out,
            "choose {} of {{{}}}",
            g.required,
            g.members.joined(", ")
        )
        .unwrap();
    }
    writeln!(out, "rule max_per_year {}", c.rules.max_modules_per_year).unwrap();
    if c.modules.iter().any(|m| !m.compulsory) {
        writeln!(
            out,
            "rule thesis_after {}",
            c.rules.modules_required_for_thesis
        )
        .unwrap();
    }
    out
}
