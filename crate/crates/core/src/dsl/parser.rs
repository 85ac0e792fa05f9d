use std::collections::{BTreeMap, HashMap};

use super::lexer::{tokenize, Suffix, Tok, Token};
use super::{DslError, DslErrorKind, Pos, SourcePositions};
use crate::design::{
    Bound, Constraint, CurvePlane, Design, ErgonomicBinding, GeneratorBinding, GeneratorKind, HandleDef, LinearExpr,
    ParamKind, ParamValue, ParameterDef, SlotValue, Unit, Vec3Expr,
};
use crate::ergonomics::ErgonomicTag;
use crate::geometry::BezierPath;
use crate::math::Vec2;

pub(super) struct Parser {
    toks: Vec<Token>,
    i: usize,
    pub positions: SourcePositions,
}

type PResult<T> = Result<T, DslError>;

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Self { toks: tokenize(src)?, i: 0, positions: SourcePositions::default() })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.i.min(self.toks.len() - 1)]
    }

    fn pos(&self) -> Pos {
        self.peek().pos
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(DslError::at(DslErrorKind::Syntax(msg.into()), self.pos()))
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num { value, .. } => format!("number {value}"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.is_punct(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{c}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{w}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected identifier, found {}", Self::describe(other))),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected string, found {}", Self::describe(other))),
        }
    }

    /// Signed number; bare literals are multiplied by `scale`.
    fn number(&mut self, scale: f64) -> PResult<f64> {
        let neg = if self.is_punct('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().tok.clone() {
            Tok::Num { value, suffix, .. } => {
                self.bump();
                let v = value * suffix.map_or(scale, |s| s.factor());
                Ok(if neg { -v } else { v })
            }
            other => self.fail(format!("expected number, found {}", Self::describe(&other))),
        }
    }

    fn integer(&mut self) -> PResult<usize> {
        match self.peek().tok.clone() {
            Tok::Num { value, suffix: None, integer: true } if value <= u32::MAX as f64 => {
                self.bump();
                Ok(value as usize)
            }
            other => self.fail(format!("expected integer, found {}", Self::describe(&other))),
        }
    }

    /// Linear form `a*p + b` with at most one parameter.
    fn expr(&mut self, scale: f64) -> PResult<LinearExpr> {
        let start = self.pos();
        let mut coeff = 0.0;
        let mut offset = 0.0;
        let mut param: Option<String> = None;
        let mut sign = 1.0;
        if self.is_punct('-') {
            self.bump();
            sign = -1.0;
        } else if self.is_punct('+') {
            self.bump();
        }
        loop {
            match self.peek().tok.clone() {
                Tok::Num { value, suffix, .. } => {
                    self.bump();
                    if self.is_punct('*') {
                        self.bump();
                        let name = self.ident()?;
                        self.merge_param(&mut param, name, start)?;
                        coeff += sign * value * suffix.map_or(1.0, |s| s.factor());
                    } else {
                        offset += sign * value * suffix.map_or(scale, |s| s.factor());
                    }
                }
                Tok::Ident(_) => {
                    let name = self.ident()?;
                    self.merge_param(&mut param, name, start)?;
                    if self.is_punct('*') {
                        self.bump();
                        coeff += sign * self.number(1.0)?;
                    } else {
                        coeff += sign;
                    }
                }
                other => return self.fail(format!("expected number or parameter, found {}", Self::describe(&other))),
            }
            if self.is_punct('+') {
                self.bump();
                sign = 1.0;
            } else if self.is_punct('-') {
                self.bump();
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(match param {
            None => LinearExpr::constant(offset),
            Some(p) => LinearExpr { coeff, param: Some(p), offset },
        })
    }

    fn merge_param(&self, slot: &mut Option<String>, name: String, at: Pos) -> PResult<()> {
        match slot {
            Some(existing) if *existing != name => Err(DslError::at(
                DslErrorKind::Syntax(format!("expression mixes `{existing}` and `{name}`; only one parameter allowed")),
                at,
            )),
            _ => {
                *slot = Some(name);
                Ok(())
            }
        }
    }

    fn vec3(&mut self, scale: f64) -> PResult<Vec3Expr> {
        self.expect_punct('(')?;
        let a = self.expr(scale)?;
        self.expect_punct(',')?;
        let b = self.expr(scale)?;
        self.expect_punct(',')?;
        let c = self.expr(scale)?;
        self.expect_punct(')')?;
        Ok(Vec3Expr([a, b, c]))
    }

    fn unit(&mut self) -> (Unit, f64) {
        let found = match &self.peek().tok {
            Tok::Ident(w) => Suffix::from_word(w),
            _ => None,
        };
        match found {
            Some(s) => {
                self.bump();
                let unit = match s {
                    Suffix::M | Suffix::Cm | Suffix::Mm => Unit::Length,
                    Suffix::Deg | Suffix::Rad => Unit::Angle,
                };
                (unit, s.factor())
            }
            None => (Unit::Unitless, 1.0),
        }
    }

    /// Kind plus the scale applied to bare literals in this declaration.
    fn kind(&mut self) -> PResult<(ParamKind, f64)> {
        let word = self.ident()?;
        match word.as_str() {
            "continuous" => {
                self.expect_punct('(')?;
                let save = self.i;
                // Bounds may use bare literals scaled by the trailing unit.
                let _ = self.number(1.0)?;
                self.expect_punct(',')?;
                let _ = self.number(1.0)?;
                self.expect_punct(')')?;
                let (unit, scale) = self.unit();
                let after = self.i;
                self.i = save;
                let min = self.number(scale)?;
                self.expect_punct(',')?;
                let max = self.number(scale)?;
                self.i = after;
                Ok((ParamKind::Continuous { min, max, unit }, scale))
            }
            "discrete" => {
                self.expect_punct('(')?;
                let save = self.i;
                let mut count = 0;
                loop {
                    let _ = self.number(1.0)?;
                    count += 1;
                    if self.is_punct(',') {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect_punct(')')?;
                let (unit, scale) = self.unit();
                let after = self.i;
                self.i = save;
                let mut levels = Vec::with_capacity(count);
                for k in 0..count {
                    if k > 0 {
                        self.expect_punct(',')?;
                    }
                    levels.push(self.number(scale)?);
                }
                self.i = after;
                Ok((ParamKind::Discrete { levels, unit }, scale))
            }
            "option" => {
                self.expect_punct('(')?;
                let mut labels = vec![self.string()?];
                while self.is_punct(',') {
                    self.bump();
                    labels.push(self.string()?);
                }
                self.expect_punct(')')?;
                Ok((ParamKind::Option { labels }, 1.0))
            }
            "boolean" => Ok((ParamKind::Boolean, 1.0)),
            "text" => {
                self.expect_punct('(')?;
                let max_len = self.integer()?;
                self.expect_punct(')')?;
                Ok((ParamKind::Text { max_len }, 1.0))
            }
            "curve" => {
                self.expect_punct('(')?;
                let segment_budget = self.integer()?;
                self.expect_punct(',')?;
                let plane = match self.ident()?.as_str() {
                    "lathe" => CurvePlane::LatheProfile,
                    "silhouette" => CurvePlane::Silhouette,
                    other => return self.fail(format!("unknown curve plane `{other}`")),
                };
                self.expect_punct(')')?;
                Ok((ParamKind::Curve { segment_budget, plane }, 1.0))
            }
            other => self.fail(format!("unknown parameter kind `{other}`")),
        }
    }

    fn value(&mut self, kind: &ParamKind, scale: f64) -> PResult<ParamValue> {
        match kind {
            ParamKind::Continuous { .. } | ParamKind::Discrete { .. } => Ok(ParamValue::Number(self.number(scale)?)),
            ParamKind::Boolean => match self.ident()?.as_str() {
                "true" => Ok(ParamValue::Bool(true)),
                "false" => Ok(ParamValue::Bool(false)),
                other => self.fail(format!("expected true or false, found `{other}`")),
            },
            ParamKind::Option { .. } | ParamKind::Text { .. } => Ok(ParamValue::Text(self.string()?)),
            ParamKind::Curve { .. } => {
                let at = self.pos();
                self.expect_word("path")?;
                self.expect_punct('(')?;
                let mut pts = Vec::new();
                loop {
                    self.expect_punct('(')?;
                    let x = self.number(1.0)?;
                    self.expect_punct(',')?;
                    let y = self.number(1.0)?;
                    self.expect_punct(')')?;
                    pts.push(Vec2::new(x, y));
                    if self.is_punct(',') {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect_punct(')')?;
                let path = BezierPath::from_points(&pts)
                    .map_err(|e| DslError::at(DslErrorKind::Syntax(format!("bad path: {e}")), at))?;
                Ok(ParamValue::Curve(path))
            }
        }
    }

    fn param(&mut self, constraints: &mut Vec<Constraint>) -> PResult<ParameterDef> {
        let at = self.pos();
        let name = self.ident()?;
        self.positions.params.entry(name.clone()).or_insert(at);
        self.expect_punct(':')?;
        let (kind, scale) = self.kind()?;
        if self.is_word("in") {
            let cat = self.pos();
            self.bump();
            let bound = self.bound(scale)?;
            self.positions.constraints.entry(name.clone()).or_insert(cat);
            constraints.push(Constraint { target: name.clone(), bound });
        }
        self.expect_word("default")?;
        let default = self.value(&kind, scale)?;
        let mut def = ParameterDef { name, kind, default, group: "basic".into(), ergonomic: None, handle: None };
        loop {
            if self.is_word("group") {
                self.bump();
                def.group = self.string()?;
            } else if self.is_word("ergonomic") {
                self.bump();
                let tag_at = self.pos();
                let tag: ErgonomicTag =
                    self.ident()?.parse().map_err(|e: crate::ergonomics::ErgonomicsError| {
                        DslError::at(DslErrorKind::Syntax(e.to_string()), tag_at)
                    })?;
                let offset_param = if self.is_punct('+') {
                    self.bump();
                    Some(self.ident()?)
                } else {
                    None
                };
                def.ergonomic = Some(ErgonomicBinding { tag, offset_param });
            } else if self.is_word("handle") {
                self.bump();
                self.expect_word("anchor")?;
                let anchor = self.vec3(1.0)?;
                self.expect_word("axis")?;
                let axis = self.vec3(1.0)?;
                self.expect_word("scale")?;
                let s = self.number(1.0)?;
                def.handle = Some(HandleDef { anchor, axis, scale: s });
            } else {
                break;
            }
        }
        self.expect_punct(';')?;
        Ok(def)
    }

    fn bound(&mut self, scale: f64) -> PResult<Bound> {
        self.expect_punct('[')?;
        let lo = self.expr(scale)?;
        self.expect_punct(',')?;
        let hi = self.expr(scale)?;
        self.expect_punct(']')?;
        Ok(if lo.param.is_none() && hi.param.is_none() {
            Bound::Absolute { lo: lo.offset, hi: hi.offset }
        } else {
            Bound::Relative { lo, hi }
        })
    }

    fn generator(&mut self) -> PResult<GeneratorBinding> {
        let at = self.pos();
        let name = self.ident()?;
        let generator = GeneratorKind::from_name(&name)
            .ok_or_else(|| DslError::at(DslErrorKind::Syntax(format!("unknown generator `{name}`")), at))?;
        self.positions.generator = Some(at);
        self.expect_punct('{')?;
        let mut bindings = BTreeMap::new();
        while !self.is_punct('}') {
            let sat = self.pos();
            let slot = self.ident()?;
            self.expect_punct('=')?;
            let value = match self.peek().tok.clone() {
                Tok::Ident(w) if w == "true" => {
                    self.bump();
                    SlotValue::Bool(true)
                }
                Tok::Ident(w) if w == "false" => {
                    self.bump();
                    SlotValue::Bool(false)
                }
                Tok::Ident(_) => SlotValue::Param(self.ident()?),
                _ => SlotValue::Number(self.number(1.0)?),
            };
            self.expect_punct(';')?;
            if bindings.insert(slot.clone(), value).is_some() {
                return Err(DslError::at(DslErrorKind::Syntax(format!("slot `{slot}` bound twice")), sat));
            }
            self.positions.slots.insert(slot, sat);
        }
        self.expect_punct('}')?;
        Ok(GeneratorBinding { generator, bindings })
    }

    pub fn document(&mut self) -> PResult<Design> {
        self.expect_word("design")?;
        let id = self.string()?;
        self.expect_punct('{')?;
        let mut params: Vec<ParameterDef> = Vec::new();
        let mut seen: HashMap<String, Pos> = HashMap::new();
        let mut constraints = Vec::new();
        let mut generator = None;
        while !self.is_punct('}') {
            let at = self.pos();
            match self.ident()?.as_str() {
                "param" => {
                    let pat = self.pos();
                    let p = self.param(&mut constraints)?;
                    if seen.insert(p.name.clone(), pat).is_some() {
                        return Err(DslError::at(DslErrorKind::DuplicateParameter(p.name), pat));
                    }
                    params.push(p);
                }
                "constraint" => {
                    let target = self.ident()?;
                    self.positions.constraints.entry(target.clone()).or_insert(at);
                    self.expect_word("in")?;
                    let bound = self.bound(1.0)?;
                    self.expect_punct(';')?;
                    constraints.push(Constraint { target, bound });
                }
                "generator" => {
                    if generator.is_some() {
                        return Err(DslError::at(DslErrorKind::Syntax("more than one generator".into()), at));
                    }
                    generator = Some(self.generator()?);
                }
                other => {
                    return Err(DslError::at(
                        DslErrorKind::Syntax(format!("expected `param`, `constraint` or `generator`, found `{other}`")),
                        at,
                    ))
                }
            }
        }
        let end = self.pos();
        self.expect_punct('}')?;
        if self.peek().tok != Tok::Eof {
            return self.fail("trailing content after design");
        }
        let generator =
            generator.ok_or_else(|| DslError::at(DslErrorKind::Syntax("design has no generator".into()), end))?;
        Ok(Design::new(id, params, constraints, generator))
    }
}
