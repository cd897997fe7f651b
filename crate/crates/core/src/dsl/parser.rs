use std::collections::BTreeMap;

use super::lexer::{lex_line, Tok, Token};
use super::{ParseError, ParseErrorCode, ParseWarning, SourceSpan};
use crate::curriculum::{
    validate_curriculum, ChoiceGroup, ConstraintKind, Curriculum, Element, ModuleCode, ModuleDef,
    ModuleSet, PrecedenceConstraint, ProgramRules,
};

/// A successfully parsed curriculum plus non-fatal findings.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub curriculum: Curriculum,
    pub warnings: Vec<ParseWarning>,
}

/// Parses DSL text into a validated curriculum in canonical form.
pub fn parse_curriculum(text: &str) -> Result<Curriculum, Vec<ParseError>> {
    parse_curriculum_with_warnings(text).map(|p| p.curriculum)
}

pub fn parse_curriculum_with_warnings(text: &str) -> Result<Parsed, Vec<ParseError>> {
    let mut p = Parser::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let span = SourceSpan::new(line_no, 1, line.chars().count());
        match lex_line(line_no, line) {
            Ok(tokens) if tokens.is_empty() => {}
            Ok(tokens) => {
                if let Err(e) = p.declaration(&tokens, span) {
                    p.errors.push(e);
                }
            }
            Err(e) => p.errors.push(e),
        }
    }
    p.finish()
}

#[derive(Clone, Debug)]
enum Endpoint {
    Module(ModuleCode),
    Level(String),
}

#[derive(Debug)]
struct RawConstraint {
    kind: ConstraintKind,
    from: (Endpoint, SourceSpan),
    to: (Endpoint, SourceSpan),
    line: SourceSpan,
}

#[derive(Debug)]
struct RawGroup {
    required: usize,
    members: Vec<(ModuleCode, SourceSpan)>,
    line: SourceSpan,
}

#[derive(Default, Debug)]
struct Parser {
    errors: Vec<ParseError>,
    warnings: Vec<ParseWarning>,
    program: Option<(String, SourceSpan)>,
    modules: Vec<(ModuleDef, SourceSpan)>,
    constraints: Vec<RawConstraint>,
    groups: Vec<RawGroup>,
    max_per_year: Option<(usize, SourceSpan)>,
    thesis_after: Option<(usize, SourceSpan)>,
}

fn malformed(span: SourceSpan, what: &str) -> ParseError {
    ParseError::new(
        span,
        ParseErrorCode::MalformedLine,
        format!("malformed {what}"),
    )
}

/// Cursor over one line's tokens.
struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: SourceSpan,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a Token, ParseError> {
        let t = self.tokens.get(self.pos).ok_or_else(|| {
            let end = self
                .tokens
                .last()
                .map(|t| t.span.column + t.span.length)
                .unwrap_or(1);
            ParseError::new(
                SourceSpan::new(self.line.line, end.min(self.line.length + 1), 0),
                ParseErrorCode::MalformedLine,
                format!("malformed {}: unexpected end of line", self.what),
            )
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn word(&mut self) -> Result<(&'a str, SourceSpan), ParseError> {
        let t = self.next()?;
        match t.word() {
            Some(w) => Ok((w, t.span)),
            None => Err(malformed(t.span, self.what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.next()?;
        if t.word() == Some(kw) {
            Ok(())
        } else {
            Err(ParseError::new(
                t.span,
                ParseErrorCode::MalformedLine,
                format!("malformed {}: expected `{kw}`", self.what),
            ))
        }
    }

    fn punct(&mut self, tok: Tok, shown: &str) -> Result<(), ParseError> {
        let t = self.next()?;
        if t.tok == tok {
            Ok(())
        } else {
            Err(ParseError::new(
                t.span,
                ParseErrorCode::MalformedLine,
                format!("malformed {}: expected `{shown}`", self.what),
            ))
        }
    }

    fn int(&mut self) -> Result<(usize, SourceSpan), ParseError> {
        let t = self.next()?;
        let w = t.word().ok_or_else(|| malformed(t.span, self.what))?;
        w.parse::<usize>().map(|n| (n, t.span)).map_err(|_| {
            ParseError::new(
                t.span,
                ParseErrorCode::InvalidNumber,
                format!("invalid number {w:?}"),
            )
        })
    }

    fn code(&mut self) -> Result<(ModuleCode, SourceSpan), ParseError> {
        let (w, span) = self.word()?;
        let code = ModuleCode::new(w);
        if code.is_well_formed() {
            Ok((code, span))
        } else {
            Err(ParseError::new(
                span,
                ParseErrorCode::MalformedLine,
                format!("invalid module code {w:?}"),
            ))
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ParseError::new(
                t.span,
                ParseErrorCode::MalformedLine,
                format!("malformed {}: unexpected trailing token", self.what),
            )),
        }
    }
}

impl Parser {
    fn declaration(&mut self, tokens: &[Token], line: SourceSpan) -> Result<(), ParseError> {
        let head = &tokens[0];
        let keyword = match head.word() {
            Some(w) => w,
            None => return Err(malformed(head.span, "line")),
        };
        let what = match keyword {
            "program" => "program declaration",
            "module" => "module declaration",
            "constraint" => "constraint",
            "choose" => "choice group",
            "rule" => "rule",
            other => {
                return Err(ParseError::new(
                    head.span,
                    ParseErrorCode::UnknownKeyword,
                    format!("unknown keyword {other:?}"),
                ))
            }
        };
        let mut cur = Cursor {
            tokens,
            pos: 1,
            line,
            what,
        };
        match keyword {
            "program" => self.program(&mut cur),
            "module" => self.module(&mut cur),
            "constraint" => self.constraint(&mut cur),
            "choose" => self.choose(&mut cur),
            _ => self.rule(&mut cur),
        }
    }

    fn program(&mut self, cur: &mut Cursor) -> Result<(), ParseError> {
        let t = cur.next()?;
        let Tok::Str(name) = &t.tok else {
            return Err(malformed(t.span, cur.what));
        };
        cur.end()?;
        if self.program.is_some() {
            return Err(ParseError::new(
                cur.line,
                ParseErrorCode::DuplicateDeclaration,
                "duplicate program declaration",
            ));
        }
        self.program = Some((name.clone(), cur.line));
        Ok(())
    }

    fn module(&mut self, cur: &mut Cursor) -> Result<(), ParseError> {
        let (code, code_span) = cur.code()?;
        cur.keyword("level")?;
        let (level, level_span) = cur.word()?;
        if !crate::curriculum::is_identifier(level) {
            return Err(malformed(level_span, cur.what));
        }
        let (kind, kind_span) = cur.word()?;
        let compulsory = match kind {
            "compulsory" => true,
            "optional" => false,
            _ => {
                return Err(ParseError::new(
                    kind_span,
                    ParseErrorCode::MalformedLine,
                    "malformed module declaration: expected `compulsory` or `optional`",
                ))
            }
        };
        cur.keyword("year")?;
        let (year, year_span) = cur.int()?;
        let nominal_year = u32::try_from(year).map_err(|_| {
            ParseError::new(
                year_span,
                ParseErrorCode::InvalidNumber,
                "year out of range",
            )
        })?;
        let mut first_marker = false;
        let mut last_marker = false;
        while let Some(t) = cur.peek() {
            match t.word() {
                Some("first") if !first_marker => first_marker = true,
                Some("last") if !last_marker => last_marker = true,
                _ => return Err(malformed(t.span, cur.what)),
            }
            cur.pos += 1;
        }
        if let Some((_, prev)) = self.modules.iter().find(|(m, _)| m.code == code) {
            return Err(ParseError::new(
                code_span,
                ParseErrorCode::DuplicateDeclaration,
                format!("module {code} already declared on line {}", prev.line),
            ));
        }
        self.modules.push((
            ModuleDef {
                code,
                level: level.to_string(),
                compulsory,
                first_marker,
                last_marker,
                nominal_year,
            },
            cur.line,
        ));
        Ok(())
    }

    fn endpoint(cur: &mut Cursor) -> Result<(Endpoint, SourceSpan), ParseError> {
        let (w, span) = cur.word()?;
        if let Some(level) = w.strip_prefix("level:") {
            if crate::curriculum::is_identifier(level) {
                return Ok((Endpoint::Level(level.to_string()), span));
            }
            return Err(malformed(span, cur.what));
        }
        let code = ModuleCode::new(w);
        if code.is_well_formed() {
            Ok((Endpoint::Module(code), span))
        } else {
            Err(malformed(span, cur.what))
        }
    }

    fn constraint(&mut self, cur: &mut Cursor) -> Result<(), ParseError> {
        let (kind, kind_span) = cur.word()?;
        let kind = match kind {
            "hard" => ConstraintKind::Hard,
            "soft" => ConstraintKind::Soft,
            _ => {
                return Err(ParseError::new(
                    kind_span,
                    ParseErrorCode::MalformedLine,
                    "malformed constraint: expected `hard` or `soft`",
                ))
            }
        };
        let from = Self::endpoint(cur)?;
        cur.punct(Tok::Arrow, "->")?;
        let to = Self::endpoint(cur)?;
        cur.end()?;
        self.constraints.push(RawConstraint {
            kind,
            from,
            to,
            line: cur.line,
        });
        Ok(())
    }

    fn choose(&mut self, cur: &mut Cursor) -> Result<(), ParseError> {
        let (required, _) = cur.int()?;
        cur.keyword("of")?;
        cur.punct(Tok::LBrace, "{")?;
        let mut members = vec![cur.code()?];
        loop {
            let t = cur.next()?;
            match t.tok {
                Tok::Comma => members.push(cur.code()?),
                Tok::RBrace => break,
                _ => return Err(malformed(t.span, cur.what)),
            }
        }
        cur.end()?;
        self.groups.push(RawGroup {
            required,
            members,
            line: cur.line,
        });
        Ok(())
    }

    fn rule(&mut self, cur: &mut Cursor) -> Result<(), ParseError> {
        let (name, name_span) = cur.word()?;
        let (value, _) = cur.int()?;
        cur.end()?;
        let slot = match name {
            "max_per_year" => &mut self.max_per_year,
            "thesis_after" => &mut self.thesis_after,
            other => {
                return Err(ParseError::new(
                    name_span,
                    ParseErrorCode::MalformedLine,
                    format!("unknown rule {other:?}"),
                ))
            }
        };
        if slot.is_some() {
            return Err(ParseError::new(
                cur.line,
                ParseErrorCode::DuplicateDeclaration,
                format!("rule {name} declared twice"),
            ));
        }
        *slot = Some((value, cur.line));
        Ok(())
    }

    fn resolve(&mut self, endpoint: &(Endpoint, SourceSpan)) -> Vec<ModuleCode> {
        let (ep, span) = endpoint;
        match ep {
            Endpoint::Module(code) => {
                if self.modules.iter().any(|(m, _)| &m.code == code) {
                    vec![code.clone()]
                } else {
                    self.errors.push(ParseError::new(
                        *span,
                        ParseErrorCode::UndefinedModule,
                        format!("undefined module {code}"),
                    ));
                    vec![]
                }
            }
            Endpoint::Level(level) => {
                let found: Vec<ModuleCode> = self
                    .modules
                    .iter()
                    .filter(|(m, _)| &m.level == level)
                    .map(|(m, _)| m.code.clone())
                    .collect();
                if found.is_empty() {
                    self.errors.push(ParseError::new(
                        *span,
                        ParseErrorCode::UndefinedLevel,
                        format!("no module has level {level}"),
                    ));
                }
                found
            }
        }
    }

    fn finish(mut self) -> Result<Parsed, Vec<ParseError>> {
        if self.program.is_none() {
            self.errors.push(ParseError::new(
                SourceSpan::start(),
                ParseErrorCode::MissingProgram,
                "missing program declaration",
            ));
        }

        // (precedent, antecedent) -> (kind, origin line)
        let mut edges: BTreeMap<(ModuleCode, ModuleCode), (ConstraintKind, SourceSpan)> =
            BTreeMap::new();
        let raw = std::mem::take(&mut self.constraints);
        for rc in &raw {
            let sources = self.resolve(&rc.from);
            let targets = self.resolve(&rc.to);
            let grouped =
                matches!(rc.from.0, Endpoint::Level(_)) || matches!(rc.to.0, Endpoint::Level(_));
            for p in &sources {
                for a in &targets {
                    if grouped && p == a {
                        continue;
                    }
                    match edges.get_mut(&(p.clone(), a.clone())) {
                        None => {
                            edges.insert((p.clone(), a.clone()), (rc.kind, rc.line));
                        }
                        Some((kind, line)) => {
                            self.warnings.push(ParseWarning {
                                span: rc.line,
                                message: format!(
                                    "duplicate constraint {p} -> {a} (also on line {})",
                                    line.line
                                ),
                            });
                            if rc.kind < *kind {
                                *kind = rc.kind;
                                *line = rc.line;
                            }
                        }
                    }
                }
            }
        }

        let mut groups = Vec::new();
        let raw_groups = std::mem::take(&mut self.groups);
        for g in &raw_groups {
            let mut members = ModuleSet::new();
            for (code, span) in &g.members {
                if !self.modules.iter().any(|(m, _)| &m.code == code) {
                    self.errors.push(ParseError::new(
                        *span,
                        ParseErrorCode::UndefinedModule,
                        format!("undefined module {code}"),
                    ));
                }
                members.insert(code.clone());
            }
            groups.push((
                ChoiceGroup {
                    members,
                    required: g.required,
                },
                g.line,
            ));
        }
        groups.sort_by(|a, b| a.0.cmp(&b.0));

        let max_per_year = match self.max_per_year {
            Some((n, _)) => n,
            None => {
                if !self.modules.is_empty() {
                    self.errors.push(ParseError::new(
                        SourceSpan::start(),
                        ParseErrorCode::MissingRule,
                        "missing `rule max_per_year`",
                    ));
                }
                1
            }
        };
        let implied = self.modules.iter().filter(|(m, _)| m.compulsory).count()
            + groups.iter().map(|(g, _)| g.required).sum::<usize>();
        let thesis_after = self.thesis_after.map(|(n, _)| n).unwrap_or(implied);

        let mut modules: Vec<(ModuleDef, SourceSpan)> = std::mem::take(&mut self.modules);
        modules.sort_by(|a, b| a.0.code.cmp(&b.0.code));

        let mut constraints: Vec<(PrecedenceConstraint, SourceSpan)> = edges
            .into_iter()
            .map(|((precedent, antecedent), (kind, line))| {
                (
                    PrecedenceConstraint {
                        kind,
                        precedent,
                        antecedent,
                    },
                    line,
                )
            })
            .collect();
        constraints.sort_by(|a, b| a.0.cmp(&b.0));

        let curriculum = Curriculum {
            name: self
                .program
                .as_ref()
                .map(|(n, _)| n.clone())
                .unwrap_or_default(),
            modules: modules.iter().map(|(m, _)| m.clone()).collect(),
            constraints: constraints.iter().map(|(c, _)| c.clone()).collect(),
            choice_groups: groups.iter().map(|(g, _)| g.clone()).collect(),
            rules: ProgramRules {
                max_modules_per_year: max_per_year,
                modules_required_for_thesis: thesis_after,
            },
        };

        let span_of = |element: &Element| -> SourceSpan {
            match element {
                Element::Program => self
                    .program
                    .as_ref()
                    .map(|p| p.1)
                    .unwrap_or(SourceSpan::start()),
                Element::Module { code } => modules
                    .iter()
                    .find(|(m, _)| &m.code == code)
                    .map(|(_, s)| *s)
                    .unwrap_or(SourceSpan::start()),
                Element::Constraint { constraint } => constraints
                    .iter()
                    .find(|(c, _)| c == constraint)
                    .map(|(_, s)| *s)
                    .unwrap_or(SourceSpan::start()),
                Element::ChoiceGroup { index } => groups
                    .get(*index)
                    .map(|g| g.1)
                    .unwrap_or(SourceSpan::start()),
                Element::Rules => self
                    .thesis_after
                    .or(self.max_per_year)
                    .map(|r| r.1)
                    .unwrap_or(SourceSpan::start()),
                Element::Cycle { modules: cycle } => constraints
                    .iter()
                    .find(|(c, _)| cycle.contains(&c.precedent) && cycle.contains(&c.antecedent))
                    .map(|(_, s)| *s)
                    .unwrap_or(SourceSpan::start()),
            }
        };

        let mut errors = std::mem::take(&mut self.errors);
        if let Err(found) = validate_curriculum(curriculum.clone()) {
            for v in found {
                // Already reported with a precise span during resolution.
                if v.code == crate::curriculum::ValidationCode::UnknownModule && !errors.is_empty()
                {
                    continue;
                }
                errors.push(ParseError::new(
                    span_of(&v.element),
                    ParseErrorCode::Invalid(v.code),
                    v.message,
                ));
            }
        }

        if errors.is_empty() {
            Ok(Parsed {
                curriculum,
                warnings: self.warnings,
            })
        } else {
            errors.sort_by_key(|e| (e.span.line, e.span.column));
            Err(errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::ValidationCode;
    use crate::fixtures::{hou, tiny, HOU_SOURCE, TINY_SOURCE};

    fn codes(errs: &[ParseError]) -> Vec<&'static str> {
        errs.iter().map(|e| e.code.as_str()).collect()
    }

    #[test]
    fn hou_source_matches_hand_built_curriculum() {
        let parsed = parse_curriculum_with_warnings(HOU_SOURCE).unwrap();
        assert_eq!(parsed.curriculum, hou());
        // group rule overlaps the three explicit hard edges
        assert_eq!(parsed.warnings.len(), 3);
    }

    #[test]
    fn hou_hard_and_soft_edges() {
        let c = parse_curriculum(HOU_SOURCE).unwrap();
        assert_eq!(c.modules.len(), 5);
        let hard: Vec<String> = c
            .constraints
            .iter()
            .filter(|k| k.kind == ConstraintKind::Hard)
            .map(|k| format!("{}->{}", k.precedent, k.antecedent))
            .collect();
        assert_eq!(hard, ["50->60", "50->61", "51->62"]);
        assert_eq!(
            c.constraints
                .iter()
                .filter(|k| k.kind == ConstraintKind::Soft)
                .count(),
            3
        );
        assert_eq!(
            c.rules,
            ProgramRules {
                max_modules_per_year: 2,
                modules_required_for_thesis: 4
            }
        );
        assert_eq!(c.choice_groups.len(), 1);
        assert_eq!(c.choice_groups[0].required, 2);
    }

    #[test]
    fn tiny_source() {
        assert_eq!(parse_curriculum(TINY_SOURCE).unwrap(), tiny());
    }

    #[test]
    fn empty_input() {
        let errs = parse_curriculum("").unwrap_err();
        assert!(codes(&errs).contains(&"no-modules"), "{errs:?}");
        assert!(errs.iter().any(|e| e.message == "no modules"));
    }

    #[test]
    fn undefined_module_in_constraint() {
        let src = "program \"P\"\nmodule 50 level junior compulsory year 1\nconstraint hard 50 -> 99\nrule max_per_year 1\n";
        let errs = parse_curriculum(src).unwrap_err();
        assert_eq!(codes(&errs), ["undefined-module"]);
        assert_eq!(errs[0].span, SourceSpan::new(3, 23, 2));
    }

    #[test]
    fn cycle_reports_validation_code() {
        let src = "program \"P\"\nmodule A level x compulsory year 1\nmodule B level x compulsory year 1\nconstraint hard A -> B\nconstraint hard B -> A\nrule max_per_year 2\n";
        let errs = parse_curriculum(src).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(
            errs[0].code,
            ParseErrorCode::Invalid(ValidationCode::PrecedenceCycle)
        );
        assert_eq!(errs[0].message, "precedence cycle: A,B");
        assert_eq!(errs[0].span.line, 4);
    }

    #[test]
    fn recovers_at_line_boundaries() {
        let src = "program \"P\"\nmodul A\nmodule A level x compulsory year one\nmodule B level x compulsory year 1 first first\nmodule C level x compulsory year 1\nmodule C level x compulsory year 1\nchoose 1 of {C\nrule max_per_year 1\nrule max_per_year 2\n";
        let errs = parse_curriculum(src).unwrap_err();
        let got = codes(&errs);
        assert_eq!(
            &got[..6],
            &[
                "unknown-keyword",
                "invalid-number",
                "malformed-line",
                "duplicate-declaration",
                "malformed-line",
                "duplicate-declaration",
            ]
        );
    }

    #[test]
    fn thesis_rule_defaults_to_implied_size() {
        let src = "program \"P\"\nmodule A level x compulsory year 1\nmodule X level y optional year 2\nmodule Y level y optional year 2\nchoose 1 of {X, Y}\nrule max_per_year 1\n";
        let c = parse_curriculum(src).unwrap();
        assert_eq!(c.rules.modules_required_for_thesis, 2);
    }

    #[test]
    fn missing_max_rule() {
        let src = "program \"P\"\nmodule A level x compulsory year 1\n";
        assert_eq!(codes(&parse_curriculum(src).unwrap_err()), ["missing-rule"]);
    }

    #[test]
    fn undefined_level() {
        let src = "program \"P\"\nmodule A level x compulsory year 1\nconstraint soft level:x -> level:z\nrule max_per_year 1\n";
        assert_eq!(
            codes(&parse_curriculum(src).unwrap_err()),
            ["undefined-level"]
        );
    }

    #[test]
    fn hard_wins_over_soft_duplicate() {
        let src = "program \"P\"\nmodule A level x compulsory year 1\nmodule B level y compulsory year 1\nconstraint soft A -> B\nconstraint hard A -> B\nrule max_per_year 1\n";
        let p = parse_curriculum_with_warnings(src).unwrap();
        assert_eq!(
            p.curriculum.constraints,
            vec![PrecedenceConstraint::hard("A", "B")]
        );
        assert_eq!(p.warnings.len(), 1);
    }
}
