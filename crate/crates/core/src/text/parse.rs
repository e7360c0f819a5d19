//! Tokenizer and recursive-descent parser for problem, rule and database
//! files.

use std::collections::BTreeMap;

use crate::model::{
    Atom, ConjunctiveQuery, Const, Database, Fact, Rel, Schema, Var, View, ViewSet,
};

use super::{ProblemFile, TextError, TextErrorKind};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Quoted(String),
    Open,
    Close,
    Comma,
    Implies,
    Dot,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Quoted(s) => format!("{s:?}"),
            Token::Open => "`(`".into(),
            Token::Close => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::Implies => "`:-`".into(),
            Token::Dot => "`.`".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn tokenize(text: &str) -> Result<Vec<(Token, Pos)>, TextError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        match c {
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    advance(&mut chars);
                }
            }
            c if c.is_whitespace() => {
                advance(&mut chars);
            }
            '(' | ')' | ',' | '.' => {
                advance(&mut chars);
                tokens.push((
                    match c {
                        '(' => Token::Open,
                        ')' => Token::Close,
                        ',' => Token::Comma,
                        _ => Token::Dot,
                    },
                    pos,
                ));
            }
            ':' => {
                advance(&mut chars);
                if chars.peek() == Some(&'-') {
                    advance(&mut chars);
                    tokens.push((Token::Implies, pos));
                } else {
                    return Err(TextError::syntax(pos.line, pos.column, "expected `:-`"));
                }
            }
            '"' | '\'' => {
                let quote = c;
                advance(&mut chars);
                let mut value = String::new();
                loop {
                    match advance(&mut chars) {
                        None => {
                            return Err(TextError::syntax(
                                pos.line,
                                pos.column,
                                "unterminated string",
                            ))
                        }
                        Some('\\') => match advance(&mut chars) {
                            Some(e) => value.push(e),
                            None => {
                                return Err(TextError::syntax(
                                    pos.line,
                                    pos.column,
                                    "unterminated string",
                                ))
                            }
                        },
                        Some(c) if c == quote => break,
                        Some(c) => value.push(c),
                    }
                }
                tokens.push((Token::Quoted(value), pos));
            }
            c if is_ident_start(c) => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    ident.push(c);
                    advance(&mut chars);
                }
                tokens.push((Token::Ident(ident), pos));
            }
            other => {
                return Err(TextError::syntax(
                    pos.line,
                    pos.column,
                    format!("unexpected character {other:?}"),
                ))
            }
        }
    }
    Ok(tokens)
}

/// Identifiers of relations and variables; constants may also start with a
/// digit.
fn valid_name(s: &str) -> bool {
    s.chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
}

struct Parser {
    tokens: Vec<(Token, Pos)>,
    next: usize,
    end: Pos,
}

struct RawAtom {
    relation: String,
    args: Vec<String>,
    pos: Pos,
}

struct RawRule {
    keyword: Option<(String, Pos)>,
    head: RawAtom,
    body: Vec<RawAtom>,
}

impl Parser {
    fn new(text: &str) -> Result<Self, TextError> {
        let tokens = tokenize(text)?;
        let lines = text.split('\n').count();
        let last = text.rsplit('\n').next().unwrap_or("");
        Ok(Parser {
            tokens,
            next: 0,
            end: Pos {
                line: lines,
                column: last.chars().count() + 1,
            },
        })
    }

    fn at_end(&self) -> bool {
        self.next == self.tokens.len()
    }

    fn peek(&self) -> Option<&(Token, Pos)> {
        self.tokens.get(self.next)
    }

    fn pos(&self) -> Pos {
        self.peek().map_or(self.end, |(_, p)| *p)
    }

    fn error(&self, message: impl Into<String>) -> TextError {
        let pos = self.pos();
        TextError::syntax(pos.line, pos.column, message)
    }

    fn unexpected(&self, wanted: &str) -> TextError {
        match self.peek() {
            Some((token, _)) => {
                self.error(format!("expected {wanted}, found {}", token.describe()))
            }
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, token: Token, wanted: &str) -> Result<Pos, TextError> {
        match self.peek() {
            Some((t, p)) if *t == token => {
                let p = *p;
                self.next += 1;
                Ok(p)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Pos), TextError> {
        match self.peek() {
            Some((Token::Ident(s), p)) if valid_name(s) => {
                let out = (s.clone(), *p);
                self.next += 1;
                Ok(out)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn constant(&mut self) -> Result<String, TextError> {
        match self.peek() {
            Some((Token::Ident(s), _)) | Some((Token::Quoted(s), _)) => {
                let out = s.clone();
                self.next += 1;
                Ok(out)
            }
            _ => Err(self.unexpected("a constant")),
        }
    }

    fn atom(&mut self, constants: bool) -> Result<RawAtom, TextError> {
        let (relation, pos) = self.name("a relation name")?;
        self.expect(Token::Open, "`(`")?;
        let mut args = Vec::new();
        if self.peek().map(|(t, _)| t) != Some(&Token::Close) {
            loop {
                let arg = if constants {
                    self.constant()?
                } else {
                    self.name("a variable")?.0
                };
                args.push(arg);
                if self.peek().map(|(t, _)| t) == Some(&Token::Comma) {
                    self.next += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Token::Close, "`,` or `)`")?;
        Ok(RawAtom {
            relation,
            args,
            pos,
        })
    }

    fn rule(&mut self) -> Result<RawRule, TextError> {
        let keyword = match (self.tokens.get(self.next), self.tokens.get(self.next + 1)) {
            (Some((Token::Ident(k), p)), Some((Token::Ident(_), _))) => {
                let out = Some((k.clone(), *p));
                self.next += 1;
                out
            }
            _ => None,
        };
        let head = self.atom(false)?;
        self.expect(Token::Implies, "`:-`")?;
        let mut body = vec![self.atom(false)?];
        while self.peek().map(|(t, _)| t) == Some(&Token::Comma) {
            self.next += 1;
            body.push(self.atom(false)?);
        }
        self.expect(Token::Dot, "`,` or `.`")?;
        Ok(RawRule {
            keyword,
            head,
            body,
        })
    }
}

/// Arity bookkeeping across a whole file: first occurrence wins.
#[derive(Default)]
struct Arities(BTreeMap<String, usize>);

impl Arities {
    fn check(&mut self, atom: &RawAtom) -> Result<(), TextError> {
        let found = atom.args.len();
        match self.0.get(&atom.relation) {
            Some(&expected) if expected != found => Err(TextError::new(
                TextErrorKind::ArityConflict {
                    relation: atom.relation.clone(),
                    expected,
                    found,
                },
                atom.pos.line,
                atom.pos.column,
            )),
            Some(_) => Ok(()),
            None => {
                self.0.insert(atom.relation.clone(), found);
                Ok(())
            }
        }
    }
}

fn to_atom(raw: &RawAtom) -> Atom {
    Atom::new(raw.relation.as_str(), raw.args.iter().map(Var::new))
}

fn to_query(rule: &RawRule) -> Result<ConjunctiveQuery, TextError> {
    ConjunctiveQuery::new(to_atom(&rule.head), rule.body.iter().map(to_atom)).map_err(|e| {
        TextError::new(
            TextErrorKind::Model(e),
            rule.head.pos.line,
            rule.head.pos.column,
        )
    })
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, TextError> {
    let mut parser = Parser::new(text)?;
    let mut arities = Arities::default();
    let mut query: Option<ConjunctiveQuery> = None;
    let mut views: Vec<View> = Vec::new();
    let mut view_names: BTreeMap<String, Pos> = BTreeMap::new();
    while !parser.at_end() {
        let start = parser.pos();
        let rule = parser.rule()?;
        let Some((keyword, kpos)) = &rule.keyword else {
            return Err(TextError::syntax(
                start.line,
                start.column,
                "expected `query` or `view`",
            ));
        };
        arities.check(&rule.head)?;
        for atom in &rule.body {
            arities.check(atom)?;
        }
        match keyword.as_str() {
            "query" => {
                if query.is_some() {
                    return Err(TextError::new(
                        TextErrorKind::DuplicateQuery,
                        kpos.line,
                        kpos.column,
                    ));
                }
                query = Some(to_query(&rule)?);
            }
            "view" => {
                if view_names
                    .insert(rule.head.relation.clone(), rule.head.pos)
                    .is_some()
                {
                    return Err(TextError::new(
                        TextErrorKind::DuplicateView {
                            name: rule.head.relation.clone(),
                        },
                        rule.head.pos.line,
                        rule.head.pos.column,
                    ));
                }
                views.push(View::new(to_query(&rule)?));
            }
            other => {
                return Err(TextError::syntax(
                    kpos.line,
                    kpos.column,
                    format!("expected `query` or `view`, found `{other}`"),
                ))
            }
        }
    }
    let query = query.ok_or_else(|| {
        TextError::new(
            TextErrorKind::MissingQuery,
            parser.end.line,
            parser.end.column,
        )
    })?;
    let views = ViewSet::new(views).map_err(|e| {
        let pos = match &e {
            crate::model::ModelError::ViewNameClash { name } => {
                view_names.get(name.as_str()).copied()
            }
            _ => None,
        }
        .unwrap_or(Pos { line: 1, column: 1 });
        TextError::new(TextErrorKind::Model(e), pos.line, pos.column)
    })?;
    if let Some(view) = views
        .views()
        .iter()
        .find(|v| v.name() == &query.head().relation)
    {
        let pos = view_names[view.name().as_str()];
        return Err(TextError::new(
            TextErrorKind::Model(crate::model::ModelError::ViewNameClash {
                name: view.name().clone(),
            }),
            pos.line,
            pos.column,
        ));
    }
    let mut schema = Schema::new();
    for (relation, arity) in &arities.0 {
        schema
            .declare(&Rel::new(relation), *arity)
            .expect("arities were checked while parsing");
    }
    Ok(ProblemFile {
        schema,
        query,
        views,
    })
}

/// A single rule, with or without the leading `query` keyword.
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery, TextError> {
    let mut parser = Parser::new(text)?;
    if parser.at_end() {
        return Err(TextError::new(TextErrorKind::MissingQuery, 1, 1));
    }
    let rule = parser.rule()?;
    if let Some((keyword, pos)) = &rule.keyword {
        if keyword != "query" {
            return Err(TextError::syntax(
                pos.line,
                pos.column,
                format!("expected `query`, found `{keyword}`"),
            ));
        }
    }
    let mut arities = Arities::default();
    arities.check(&rule.head)?;
    for atom in &rule.body {
        arities.check(atom)?;
    }
    if !parser.at_end() {
        return Err(parser.error("expected end of input after the rule"));
    }
    to_query(&rule)
}

/// Facts `R(a, b).`, checked against `schema`. Arguments are constants,
/// bare or quoted.
pub fn parse_database(text: &str, schema: &Schema) -> Result<Database, TextError> {
    let mut parser = Parser::new(text)?;
    let mut db = Database::new();
    while !parser.at_end() {
        let raw = parser.atom(true)?;
        parser.expect(Token::Dot, "`.`")?;
        let relation = Rel::new(&raw.relation);
        let kind = match schema.arity(&relation) {
            None => Some(TextErrorKind::UnknownRelation {
                relation: raw.relation.clone(),
            }),
            Some(expected) if expected != raw.args.len() => Some(TextErrorKind::ArityConflict {
                relation: raw.relation.clone(),
                expected,
                found: raw.args.len(),
            }),
            Some(_) => None,
        };
        if let Some(kind) = kind {
            return Err(TextError::new(kind, raw.pos.line, raw.pos.column));
        }
        db.insert(Fact::new(relation, raw.args.iter().map(Const::new)));
    }
    Ok(db)
}
