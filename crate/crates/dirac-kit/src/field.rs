//! Differentiable fields on a chart: scalars, vector fields, 1-forms,
//! 2-forms, and point maps, all evaluable to second-order jets.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{self, Ast};
use crate::jet::{jet_solve, Jet2};

type EvalFn = Arc<dyn Fn(&[f64]) -> Jet2 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Const(f64),
    Coord(usize),
    Dyn(EvalFn),
}

/// A scalar function of the chart coordinates, evaluable to a [`Jet2`].
///
/// Constants and coordinates are kept symbolic so that arithmetic can fold
/// them; sums of mostly-zero terms (pullbacks, contractions) then cost only
/// their nonzero parts at evaluation time.
#[derive(Clone)]
pub struct ScalarField {
    chart: Chart,
    repr: Repr,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Const(v) => write!(f, "ScalarField({v} on {})", self.chart.name()),
            Repr::Coord(i) => write!(f, "ScalarField({} on {})", self.chart.coords()[*i], self.chart.name()),
            Repr::Dyn(_) => write!(f, "ScalarField(on {})", self.chart.name()),
        }
    }
}

impl ScalarField {
    pub fn from_fn(
        chart: &Chart,
        f: impl Fn(&[f64]) -> Jet2 + Send + Sync + 'static,
    ) -> ScalarField {
        ScalarField { chart: chart.clone(), repr: Repr::Dyn(Arc::new(f)) }
    }

    pub fn constant(chart: &Chart, value: f64) -> ScalarField {
        ScalarField { chart: chart.clone(), repr: Repr::Const(value) }
    }

    pub fn zero(chart: &Chart) -> ScalarField {
        ScalarField::constant(chart, 0.0)
    }

    pub fn coordinate(chart: &Chart, i: usize) -> ScalarField {
        assert!(i < chart.dim());
        ScalarField { chart: chart.clone(), repr: Repr::Coord(i) }
    }

    fn const_value(&self) -> Option<f64> {
        match self.repr {
            Repr::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.repr, Repr::Const(v) if v == 0.0)
    }

    pub fn coordinate_by_name(chart: &Chart, name: &str) -> Result<ScalarField> {
        let i = chart
            .coord_index(name)
            .ok_or_else(|| Error::InvalidParameter(format!("no coordinate `{name}`")))?;
        Ok(ScalarField::coordinate(chart, i))
    }

    /// Builds a field from expression text; identifiers must be chart
    /// coordinates or keys of `params`.
    pub fn parse(
        src: &str,
        chart: &Chart,
        params: &BTreeMap<String, f64>,
    ) -> Result<ScalarField> {
        let ast = expr::parse(src)?;
        expr::check_identifiers(src, &ast, chart.coords(), params)?;
        Ok(Self::from_ast(&ast, chart, params))
    }

    pub fn from_ast(ast: &Ast, chart: &Chart, params: &BTreeMap<String, f64>) -> ScalarField {
        match ast {
            Ast::Num(v) => ScalarField::constant(chart, *v),
            Ast::Var(name) => match chart.coord_index(name) {
                Some(i) => ScalarField::coordinate(chart, i),
                None => ScalarField::constant(chart, params[name]),
            },
            Ast::Add(a, b) => Self::from_ast(a, chart, params).add(&Self::from_ast(b, chart, params)),
            Ast::Sub(a, b) => Self::from_ast(a, chart, params).sub(&Self::from_ast(b, chart, params)),
            Ast::Mul(a, b) => Self::from_ast(a, chart, params).mul(&Self::from_ast(b, chart, params)),
            Ast::Div(a, b) => Self::from_ast(a, chart, params).div(&Self::from_ast(b, chart, params)),
            Ast::Neg(a) => Self::from_ast(a, chart, params).neg(),
            Ast::Pow(a, k) => Self::from_ast(a, chart, params).powi(*k),
            Ast::Sin(a) => Self::from_ast(a, chart, params).sin(),
            Ast::Cos(a) => Self::from_ast(a, chart, params).cos(),
            Ast::Sqrt(a) => Self::from_ast(a, chart, params).sqrt(),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn jet(&self, p: &[f64]) -> Jet2 {
        let n = self.chart.dim();
        match &self.repr {
            Repr::Const(v) => Jet2::constant(n, *v),
            Repr::Coord(i) => Jet2::coordinate(n, *i, p[*i]),
            Repr::Dyn(f) => f(p),
        }
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        match &self.repr {
            Repr::Const(v) => *v,
            Repr::Coord(i) => p[*i],
            Repr::Dyn(f) => f(p).value,
        }
    }

    pub fn gradient(&self, p: &[f64]) -> DVector<f64> {
        self.jet(p).gradient
    }

    fn dyn_binary(
        &self,
        other: &ScalarField,
        op: fn(&Jet2, &Jet2) -> Jet2,
    ) -> ScalarField {
        assert!(self.chart.same_as(&other.chart), "field charts differ");
        let (a, b) = (self.clone(), other.clone());
        ScalarField::from_fn(&self.chart, move |p| op(&a.jet(p), &b.jet(p)))
    }

    fn dyn_unary(&self, op: impl Fn(&Jet2) -> Jet2 + Send + Sync + 'static) -> ScalarField {
        let a = self.clone();
        ScalarField::from_fn(&self.chart, move |p| op(&a.jet(p)))
    }

    pub fn add(&self, o: &ScalarField) -> ScalarField {
        match (self.const_value(), o.const_value()) {
            (Some(a), Some(b)) => ScalarField::constant(&self.chart, a + b),
            (Some(a), None) if a == 0.0 => o.clone(),
            (None, Some(b)) if b == 0.0 => self.clone(),
            _ => self.dyn_binary(o, |a, b| a.add(b)),
        }
    }

    pub fn sub(&self, o: &ScalarField) -> ScalarField {
        match (self.const_value(), o.const_value()) {
            (Some(a), Some(b)) => ScalarField::constant(&self.chart, a - b),
            (None, Some(b)) if b == 0.0 => self.clone(),
            (Some(a), None) if a == 0.0 => o.neg(),
            _ => self.dyn_binary(o, |a, b| a.sub(b)),
        }
    }

    pub fn mul(&self, o: &ScalarField) -> ScalarField {
        match (self.const_value(), o.const_value()) {
            (Some(a), Some(b)) => ScalarField::constant(&self.chart, a * b),
            (Some(c), None) => o.scale(c),
            (None, Some(c)) => self.scale(c),
            _ => self.dyn_binary(o, |a, b| a.mul(b)),
        }
    }

    pub fn div(&self, o: &ScalarField) -> ScalarField {
        match (self.const_value(), o.const_value()) {
            (Some(a), Some(b)) => ScalarField::constant(&self.chart, a / b),
            (Some(a), None) if a == 0.0 => ScalarField::zero(&self.chart),
            (None, Some(c)) => self.scale(1.0 / c),
            _ => self.dyn_binary(o, |a, b| a.div(b)),
        }
    }

    pub fn neg(&self) -> ScalarField {
        match self.const_value() {
            Some(v) => ScalarField::constant(&self.chart, -v),
            None => self.dyn_unary(|a| a.neg()),
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        if c == 0.0 {
            return ScalarField::zero(&self.chart);
        }
        if c == 1.0 {
            return self.clone();
        }
        match self.const_value() {
            Some(v) => ScalarField::constant(&self.chart, c * v),
            None => self.dyn_unary(move |a| a.scale(c)),
        }
    }

    pub fn sin(&self) -> ScalarField {
        match self.const_value() {
            Some(v) => ScalarField::constant(&self.chart, v.sin()),
            None => self.dyn_unary(|a| a.sin()),
        }
    }

    pub fn cos(&self) -> ScalarField {
        match self.const_value() {
            Some(v) => ScalarField::constant(&self.chart, v.cos()),
            None => self.dyn_unary(|a| a.cos()),
        }
    }

    pub fn sqrt(&self) -> ScalarField {
        match self.const_value() {
            Some(v) => ScalarField::constant(&self.chart, v.sqrt()),
            None => self.dyn_unary(|a| a.sqrt()),
        }
    }

    pub fn powi(&self, k: i32) -> ScalarField {
        match self.const_value() {
            Some(v) => ScalarField::constant(&self.chart, v.powi(k)),
            None => self.dyn_unary(move |a| a.powi(k)),
        }
    }

    /// The partial derivative along coordinate `j`. The result is one jet
    /// order lower: its Hessian slot is zero.
    pub fn partial(&self, j: usize) -> ScalarField {
        match &self.repr {
            Repr::Const(_) => ScalarField::zero(&self.chart),
            Repr::Coord(i) => {
                ScalarField::constant(&self.chart, if *i == j { 1.0 } else { 0.0 })
            }
            Repr::Dyn(f) => {
                let f = f.clone();
                let n = self.chart.dim();
                ScalarField::from_fn(&self.chart, move |p| {
                    let jet = f(p);
                    Jet2 {
                        value: jet.gradient[j],
                        gradient: jet.hessian.column(j).into_owned(),
                        hessian: DMatrix::zeros(n, n),
                    }
                })
            }
        }
    }

    /// Composition with a point map: the result lives on the map's source
    /// chart. Composing a coordinate field yields the map component itself.
    pub fn compose(&self, map: &PointMap) -> ScalarField {
        assert!(map.target.same_as(&self.chart), "composition chart mismatch");
        match &self.repr {
            Repr::Const(v) => ScalarField::constant(&map.source, *v),
            Repr::Coord(i) => map.comps[*i].clone(),
            Repr::Dyn(f) => {
                let f = f.clone();
                let map = map.clone();
                ScalarField::from_fn(&map.source.clone(), move |p| {
                    let (target_pt, comp_jets) = map.jets(p);
                    let fj = f(&target_pt);
                    let n = map.source.dim();
                    let m = map.target.dim();
                    let jac = DMatrix::from_fn(m, n, |a, i| comp_jets[a].gradient[i]);
                    let gradient = jac.transpose() * &fj.gradient;
                    let mut hessian = jac.transpose() * &fj.hessian * &jac;
                    for a in 0..m {
                        if fj.gradient[a] != 0.0 {
                            hessian += fj.gradient[a] * &comp_jets[a].hessian;
                        }
                    }
                    Jet2 { value: fj.value, gradient, hessian }
                })
            }
        }
    }

    pub fn differential(&self) -> OneForm {
        let comps = (0..self.chart.dim()).map(|j| self.partial(j)).collect();
        OneForm { chart: self.chart.clone(), comps }
    }
}

/// A vector field expressed in the chart's coordinate frame.
#[derive(Clone, Debug)]
pub struct VectorField {
    chart: Chart,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(chart: &Chart, comps: Vec<ScalarField>) -> Result<VectorField> {
        if comps.len() != chart.dim() {
            return Err(Error::DimensionMismatch { expected: chart.dim(), found: comps.len() });
        }
        for c in &comps {
            chart.ensure_same(c.chart())?;
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    pub fn zero(chart: &Chart) -> VectorField {
        let comps = (0..chart.dim()).map(|_| ScalarField::zero(chart)).collect();
        VectorField { chart: chart.clone(), comps }
    }

    /// The coordinate frame field along coordinate `i`.
    pub fn basis(chart: &Chart, i: usize) -> VectorField {
        let comps = (0..chart.dim())
            .map(|j| ScalarField::constant(chart, if i == j { 1.0 } else { 0.0 }))
            .collect();
        VectorField { chart: chart.clone(), comps }
    }

    pub fn parse(
        comps: &[&str],
        chart: &Chart,
        params: &BTreeMap<String, f64>,
    ) -> Result<VectorField> {
        let fields = comps
            .iter()
            .map(|src| ScalarField::parse(src, chart, params))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(chart, fields)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.comps.len(), |i, _| self.comps[i].value(p))
    }

    /// The directional derivative `X[f]` as a scalar field.
    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        let mut acc = ScalarField::zero(&self.chart);
        for (i, xi) in self.comps.iter().enumerate() {
            acc = acc.add(&xi.mul(&f.partial(i)));
        }
        acc
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn scale_field(&self, f: &ScalarField) -> VectorField {
        let comps = self.comps.iter().map(|c| c.mul(f)).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn scale(&self, c: f64) -> VectorField {
        let comps = self.comps.iter().map(|f| f.scale(c)).collect();
        VectorField { chart: self.chart.clone(), comps }
    }
}

/// A 1-form expressed in the chart's coordinate coframe.
#[derive(Clone, Debug)]
pub struct OneForm {
    chart: Chart,
    comps: Vec<ScalarField>,
}

impl OneForm {
    pub fn new(chart: &Chart, comps: Vec<ScalarField>) -> Result<OneForm> {
        if comps.len() != chart.dim() {
            return Err(Error::DimensionMismatch { expected: chart.dim(), found: comps.len() });
        }
        for c in &comps {
            chart.ensure_same(c.chart())?;
        }
        Ok(OneForm { chart: chart.clone(), comps })
    }

    pub fn zero(chart: &Chart) -> OneForm {
        let comps = (0..chart.dim()).map(|_| ScalarField::zero(chart)).collect();
        OneForm { chart: chart.clone(), comps }
    }

    /// The coordinate coframe form along coordinate `i`.
    pub fn basis(chart: &Chart, i: usize) -> OneForm {
        let comps = (0..chart.dim())
            .map(|j| ScalarField::constant(chart, if i == j { 1.0 } else { 0.0 }))
            .collect();
        OneForm { chart: chart.clone(), comps }
    }

    pub fn parse(
        comps: &[&str],
        chart: &Chart,
        params: &BTreeMap<String, f64>,
    ) -> Result<OneForm> {
        let fields = comps
            .iter()
            .map(|src| ScalarField::parse(src, chart, params))
            .collect::<Result<Vec<_>>>()?;
        OneForm::new(chart, fields)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.comps.len(), |i, _| self.comps[i].value(p))
    }

    /// The pairing `α(X)` as a scalar field.
    pub fn apply(&self, x: &VectorField) -> ScalarField {
        let mut acc = ScalarField::zero(&self.chart);
        for (a, xi) in self.comps.iter().zip(x.comps()) {
            acc = acc.add(&a.mul(xi));
        }
        acc
    }

    pub fn add(&self, o: &OneForm) -> OneForm {
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect();
        OneForm { chart: self.chart.clone(), comps }
    }

    pub fn sub(&self, o: &OneForm) -> OneForm {
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b)).collect();
        OneForm { chart: self.chart.clone(), comps }
    }

    pub fn scale_field(&self, f: &ScalarField) -> OneForm {
        let comps = self.comps.iter().map(|c| c.mul(f)).collect();
        OneForm { chart: self.chart.clone(), comps }
    }

    pub fn scale(&self, c: f64) -> OneForm {
        let comps = self.comps.iter().map(|f| f.scale(c)).collect();
        OneForm { chart: self.chart.clone(), comps }
    }
}

/// A 2-form as an antisymmetric matrix of coefficient fields,
/// `ω = Σ_{i<j} ω_ij dx^i ∧ dx^j` with `comps[i][j] = ω(∂_i, ∂_j)`.
#[derive(Clone, Debug)]
pub struct TwoForm {
    chart: Chart,
    comps: Vec<Vec<ScalarField>>,
}

impl TwoForm {
    pub fn new(chart: &Chart, comps: Vec<Vec<ScalarField>>) -> Result<TwoForm> {
        let n = chart.dim();
        if comps.len() != n || comps.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: comps.len() });
        }
        Ok(TwoForm { chart: chart.clone(), comps })
    }

    pub fn zero(chart: &Chart) -> TwoForm {
        let n = chart.dim();
        let comps = (0..n)
            .map(|_| (0..n).map(|_| ScalarField::zero(chart)).collect())
            .collect();
        TwoForm { chart: chart.clone(), comps }
    }

    /// Builds from the strictly upper-triangular entries `(i, j, ω_ij)`;
    /// the lower triangle is filled by antisymmetry.
    pub fn from_upper(chart: &Chart, entries: &[(usize, usize, ScalarField)]) -> TwoForm {
        let mut form = TwoForm::zero(chart);
        for (i, j, f) in entries {
            form.comps[*i][*j] = f.clone();
            form.comps[*j][*i] = f.neg();
        }
        form
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[Vec<ScalarField>] {
        &self.comps
    }

    pub fn at(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.chart.dim();
        DMatrix::from_fn(n, n, |i, j| self.comps[i][j].value(p))
    }

    /// Maximum of `|ω_ij + ω_ji|` at `p`.
    pub fn antisymmetry_residual(&self, p: &[f64]) -> f64 {
        let m = self.at(p);
        let r = &m + m.transpose();
        r.amax()
    }

    /// The interior product `i_X ω = ω(X, ·)`.
    pub fn interior(&self, x: &VectorField) -> OneForm {
        let n = self.chart.dim();
        let comps = (0..n)
            .map(|j| {
                let mut acc = ScalarField::zero(&self.chart);
                for i in 0..n {
                    acc = acc.add(&x.comps()[i].mul(&self.comps[i][j]));
                }
                acc
            })
            .collect();
        OneForm { chart: self.chart.clone(), comps }
    }

    /// The full contraction `ω(X, Y)` as a scalar field.
    pub fn contract(&self, x: &VectorField, y: &VectorField) -> ScalarField {
        self.interior(x).apply(y)
    }

    pub fn add(&self, o: &TwoForm) -> TwoForm {
        let n = self.chart.dim();
        let comps = (0..n)
            .map(|i| (0..n).map(|j| self.comps[i][j].add(&o.comps[i][j])).collect())
            .collect();
        TwoForm { chart: self.chart.clone(), comps }
    }
}

/// A smooth map between charts, given by target-coordinate component fields
/// on the source chart. Supplies values, Jacobians, and second derivatives.
#[derive(Clone)]
pub struct PointMap {
    source: Chart,
    target: Chart,
    comps: Vec<ScalarField>,
}

impl PointMap {
    pub fn new(source: &Chart, target: &Chart, comps: Vec<ScalarField>) -> Result<PointMap> {
        if comps.len() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), found: comps.len() });
        }
        for c in &comps {
            source.ensure_same(c.chart())?;
        }
        Ok(PointMap { source: source.clone(), target: target.clone(), comps })
    }

    pub fn identity(chart: &Chart) -> PointMap {
        let comps = (0..chart.dim()).map(|i| ScalarField::coordinate(chart, i)).collect();
        PointMap { source: chart.clone(), target: chart.clone(), comps }
    }

    pub fn parse(
        source: &Chart,
        target: &Chart,
        comps: &[&str],
        params: &BTreeMap<String, f64>,
    ) -> Result<PointMap> {
        let fields = comps
            .iter()
            .map(|src| ScalarField::parse(src, source, params))
            .collect::<Result<Vec<_>>>()?;
        PointMap::new(source, target, fields)
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn value(&self, p: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.value(p)).collect()
    }

    fn jets(&self, p: &[f64]) -> (Vec<f64>, Vec<Jet2>) {
        let jets: Vec<Jet2> = self.comps.iter().map(|c| c.jet(p)).collect();
        let value = jets.iter().map(|j| j.value).collect();
        (value, jets)
    }

    /// Jacobian with shape `target_dim × source_dim`.
    pub fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let m = self.target.dim();
        let n = self.source.dim();
        let jets: Vec<Jet2> = self.comps.iter().map(|c| c.jet(p)).collect();
        DMatrix::from_fn(m, n, |a, i| jets[a].gradient[i])
    }

    /// Pullback of a 1-form on the target: `(φ*β)_i = Σ_a (β_a∘φ) ∂_i φ^a`.
    pub fn pullback_one_form(&self, beta: &OneForm) -> Result<OneForm> {
        self.target.ensure_same(beta.chart())?;
        let n = self.source.dim();
        let pulled: Vec<ScalarField> =
            beta.comps().iter().map(|b| b.compose(self)).collect();
        let comps = (0..n)
            .map(|i| {
                let mut acc = ScalarField::zero(&self.source);
                for (a, b) in pulled.iter().enumerate() {
                    acc = acc.add(&b.mul(&self.comps[a].partial(i)));
                }
                acc
            })
            .collect();
        OneForm::new(&self.source, comps)
    }

    /// Pullback of a 2-form on the target.
    pub fn pullback_two_form(&self, omega: &TwoForm) -> Result<TwoForm> {
        self.target.ensure_same(omega.chart())?;
        let n = self.source.dim();
        let m = self.target.dim();
        let pulled: Vec<Vec<ScalarField>> = (0..m)
            .map(|a| (0..m).map(|b| omega.comps()[a][b].compose(self)).collect())
            .collect();
        let partials: Vec<Vec<ScalarField>> = (0..m)
            .map(|a| (0..n).map(|i| self.comps[a].partial(i)).collect())
            .collect();
        let mut comps: Vec<Vec<ScalarField>> = (0..n)
            .map(|_| (0..n).map(|_| ScalarField::zero(&self.source)).collect())
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut acc = ScalarField::zero(&self.source);
                for a in 0..m {
                    for b in 0..m {
                        if a == b {
                            continue;
                        }
                        acc = acc.add(&pulled[a][b].mul(&partials[a][i]).mul(&partials[b][j]));
                    }
                }
                comps[i][j] = acc.clone();
                comps[j][i] = acc.neg();
            }
        }
        TwoForm::new(&self.source, comps)
    }
}

impl fmt::Debug for PointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointMap({} -> {})", self.source.name(), self.target.name())
    }
}

/// The Jacobi–Lie bracket `[X, Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.chart().ensure_same(y.chart())?;
    let n = x.chart().dim();
    let comps = (0..n)
        .map(|i| x.apply(&y.comps()[i]).sub(&y.apply(&x.comps()[i])))
        .collect();
    VectorField::new(x.chart(), comps)
}

/// The exterior derivative of a 1-form: `(dα)_ij = ∂_i α_j − ∂_j α_i`.
pub fn exterior_derivative(alpha: &OneForm) -> TwoForm {
    let chart = alpha.chart().clone();
    let n = chart.dim();
    let mut comps: Vec<Vec<ScalarField>> = (0..n)
        .map(|_| (0..n).map(|_| ScalarField::zero(&chart)).collect())
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let f = alpha.comps()[j].partial(i).sub(&alpha.comps()[i].partial(j));
            comps[i][j] = f.clone();
            comps[j][i] = f.neg();
        }
    }
    TwoForm::new(&chart, comps).expect("square by construction")
}

/// The Lie derivative of a 1-form via the Cartan formula
/// `£_X α = i_X dα + d(α(X))`.
pub fn lie_derivative_one_form(x: &VectorField, alpha: &OneForm) -> Result<OneForm> {
    x.chart().ensure_same(alpha.chart())?;
    let term1 = exterior_derivative(alpha).interior(x);
    let term2 = alpha.apply(x).differential();
    Ok(term1.add(&term2))
}

/// Evaluates `dω(X, Y, Z)` at a point through the coordinate-free formula
/// `X[ω(Y,Z)] − Y[ω(X,Z)] + Z[ω(X,Y)] − ω([X,Y],Z) + ω([X,Z],Y) − ω([Y,Z],X)`.
pub fn d_two_form_contract(
    omega: &TwoForm,
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
    p: &[f64],
) -> Result<f64> {
    omega.chart().ensure_same(x.chart())?;
    omega.chart().ensure_same(y.chart())?;
    omega.chart().ensure_same(z.chart())?;
    let t1 = x.apply(&omega.contract(y, z)).value(p);
    let t2 = y.apply(&omega.contract(x, z)).value(p);
    let t3 = z.apply(&omega.contract(x, y)).value(p);
    let t4 = omega.contract(&lie_bracket(x, y)?, z).value(p);
    let t5 = omega.contract(&lie_bracket(x, z)?, y).value(p);
    let t6 = omega.contract(&lie_bracket(y, z)?, x).value(p);
    Ok(t1 - t2 + t3 - t4 + t5 - t6)
}

/// Pointwise solve of `A(m) x(m) = b(m)` with field entries; the solution
/// components are fields with jets propagated through the solve.
pub fn solve_field_system(
    a: Vec<Vec<ScalarField>>,
    b: Vec<ScalarField>,
) -> Result<Vec<ScalarField>> {
    let k = b.len();
    if k == 0 || a.len() != k || a.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, found: a.len() });
    }
    let chart = b[0].chart().clone();
    for row in &a {
        for f in row {
            chart.ensure_same(f.chart())?;
        }
    }
    let a = Arc::new(a);
    let b = Arc::new(b);
    Ok((0..k)
        .map(|i| {
            let a = a.clone();
            let b = b.clone();
            ScalarField::from_fn(&chart, move |p| {
                let aj: Vec<Vec<Jet2>> =
                    a.iter().map(|row| row.iter().map(|f| f.jet(p)).collect()).collect();
                let bj: Vec<Jet2> = b.iter().map(|f| f.jet(p)).collect();
                let sol = jet_solve(&aj, &bj).unwrap_or_else(|_| {
                    panic!("singular pointwise system at {p:?}")
                });
                sol[i].clone()
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chart_xy() -> Chart {
        Chart::new("plane", &["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap()
    }

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn parsed_field_evaluates() {
        let c = Chart::new("m", &["y", "p_x"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let f = ScalarField::parse("(1+y^2)*p_x", &c, &no_params()).unwrap();
        assert!((f.value(&[1.0, 1.0]) - 2.0).abs() < 1e-15);
        let zero = ScalarField::parse("0", &c, &no_params()).unwrap();
        assert_eq!(zero.value(&[0.3, -0.4]), 0.0);
        let g = ScalarField::parse("sqrt(1+y^2)*p_x", &c, &no_params()).unwrap();
        assert!((g.value(&[1.0, 2.0]) - 2.0_f64.sqrt() * 2.0).abs() < 1e-14);
    }

    #[test]
    fn unknown_identifier_is_reported() {
        let c = chart_xy();
        match ScalarField::parse("x + q", &c, &no_params()) {
            Err(Error::UnknownIdentifier { name, .. }) => assert_eq!(name, "q"),
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    /// Central finite difference of a field's value; independent of the jet
    /// arithmetic it checks.
    fn fd_gradient(f: &ScalarField, p: &[f64], h: f64) -> DVector<f64> {
        DVector::from_fn(p.len(), |i, _| {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[i] += h;
            b[i] -= h;
            (f.value(&a) - f.value(&b)) / (2.0 * h)
        })
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let c = chart_xy();
        let f = ScalarField::parse("sin(x)*y^3 - sqrt(4+x^2)/(1+y^2)", &c, &no_params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in c.sample_many(64, &mut rng) {
            let g = f.gradient(&p);
            let fd = fd_gradient(&f, &p, 4.0e-5);
            let scale = g.norm().max(1.0);
            assert!((g - fd).norm() / scale < 1e-6, "gradient mismatch at {p:?}");
        }
    }

    #[test]
    fn lie_bracket_examples() {
        let c = chart_xy();
        let x = VectorField::parse(&["0", "x"], &c, &no_params()).unwrap(); // x ∂_y
        let y = VectorField::parse(&["y", "0"], &c, &no_params()).unwrap(); // y ∂_x
        let b = lie_bracket(&x, &y).unwrap(); // x ∂_x − y ∂_y
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for p in c.sample_many(16, &mut rng) {
            assert!((b.at(&p)[0] - p[0]).abs() < 1e-12);
            assert!((b.at(&p)[1] + p[1]).abs() < 1e-12);
            // cross-check against finite differences of the flow-free formula
            let fd = {
                let h = 1e-5;
                let dy0 = fd_gradient(&y.comps()[0], &p, h);
                let dx1 = fd_gradient(&x.comps()[1], &p, h);
                let xv = x.at(&p);
                let yv = y.at(&p);
                DVector::from_vec(vec![
                    xv.dot(&dy0) - 0.0,
                    0.0 - yv.dot(&dx1),
                ])
            };
            assert!((b.at(&p) - fd).norm() < 1e-6);
        }
        // antisymmetry: [X, X] = 0
        let bb = lie_bracket(&x, &x).unwrap();
        assert!(bb.at(&[0.7, -0.3]).norm() < 1e-14);
        // coordinate fields commute
        let e0 = VectorField::basis(&c, 0);
        let e1 = VectorField::basis(&c, 1);
        assert!(lie_bracket(&e0, &e1).unwrap().at(&[0.2, 0.4]).norm() < 1e-15);
    }

    #[test]
    fn jacobi_identity_pointwise() {
        let c = Chart::new("m", &["x", "y", "z"], &[(-1.5, 1.5); 3]).unwrap();
        let x = VectorField::parse(&["y*z", "x^2", "sin(y)"], &c, &no_params()).unwrap();
        let y = VectorField::parse(&["cos(z)", "x*y", "1"], &c, &no_params()).unwrap();
        let z = VectorField::parse(&["x", "z^2", "y"], &c, &no_params()).unwrap();
        let j1 = lie_bracket(&x, &lie_bracket(&y, &z).unwrap()).unwrap();
        let j2 = lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap();
        let j3 = lie_bracket(&z, &lie_bracket(&x, &y).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in c.sample_many(32, &mut rng) {
            let s = j1.at(&p) + j2.at(&p) + j3.at(&p);
            assert!(s.norm() < 1e-9, "Jacobi residual {} at {:?}", s.norm(), p);
        }
    }

    #[test]
    fn exterior_derivative_examples() {
        let c3 = Chart::new("q", &["x", "y", "z"], &[(-2.0, 2.0); 3]).unwrap();
        // d(dx) = 0
        let dx = OneForm::basis(&c3, 0);
        let ddx = exterior_derivative(&dx);
        assert!(ddx.at(&[0.5, 0.1, -0.2]).amax() < 1e-15);
        // d(dz − y dx)(∂_x, ∂_y) = +1
        let alpha = OneForm::parse(&["-y", "0", "1"], &c3, &no_params()).unwrap();
        let da = exterior_derivative(&alpha);
        assert!((da.at(&[0.3, 0.7, 0.0])[(0, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn d_of_d_vanishes() {
        let c = Chart::new("m", &["x", "y", "z"], &[(-1.5, 1.5); 3]).unwrap();
        let alpha =
            OneForm::parse(&["x*y^2", "sin(z)", "x + z^3"], &c, &no_params()).unwrap();
        let da = exterior_derivative(&alpha);
        let fields = [
            VectorField::parse(&["1", "x", "y^2"], &c, &no_params()).unwrap(),
            VectorField::parse(&["z", "1", "x"], &c, &no_params()).unwrap(),
            VectorField::parse(&["y", "z", "1"], &c, &no_params()).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in c.sample_many(32, &mut rng) {
            let v = d_two_form_contract(&da, &fields[0], &fields[1], &fields[2], &p).unwrap();
            assert!(v.abs() < 1e-9, "ddα = {v} at {p:?}");
        }
    }

    #[test]
    fn lie_derivative_examples() {
        let c = chart_xy();
        let dx = OneForm::basis(&c, 0);
        let ex = VectorField::basis(&c, 0);
        let ey = VectorField::basis(&c, 1);
        // £_{∂x} dx = 0
        let l1 = lie_derivative_one_form(&ex, &dx).unwrap();
        assert!(l1.at(&[0.4, 0.6]).norm() < 1e-15);
        // £_{∂x}(y dx) = 0, £_{∂y}(y dx) = dx
        let ydx = OneForm::parse(&["y", "0"], &c, &no_params()).unwrap();
        assert!(lie_derivative_one_form(&ex, &ydx).unwrap().at(&[0.4, 0.6]).norm() < 1e-15);
        let l2 = lie_derivative_one_form(&ey, &ydx).unwrap();
        let v = l2.at(&[0.4, 0.6]);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    /// RK4 integration of the flow of `x`, used as an independent oracle for
    /// the Cartan-formula Lie derivative.
    fn flow(x: &VectorField, p: &[f64], t: f64, steps: usize) -> Vec<f64> {
        let mut q = DVector::from_column_slice(p);
        let h = t / steps as f64;
        for _ in 0..steps {
            let k1 = x.at(q.as_slice());
            let k2 = x.at((&q + 0.5 * h * &k1).as_slice());
            let k3 = x.at((&q + 0.5 * h * &k2).as_slice());
            let k4 = x.at((&q + h * &k3).as_slice());
            q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        q.as_slice().to_vec()
    }

    #[test]
    fn cartan_formula_matches_flow_pullback() {
        let c = chart_xy();
        let x = VectorField::parse(&["y", "-x + 0.3*y^2"], &c, &no_params()).unwrap();
        let alpha = OneForm::parse(&["x*y", "cos(x)"], &c, &no_params()).unwrap();
        let lie = lie_derivative_one_form(&x, &alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = 1e-3;
        for p in c.sample_many(24, &mut rng) {
            // (φ_t^* α − φ_{−t}^* α) / 2t, with pullback Jacobians by finite
            // differences of the flow map.
            let pull = |s: f64| -> DVector<f64> {
                let qp = flow(&x, &p, s, 8);
                let av = alpha.at(&qp);
                let h = 1e-5;
                let n = p.len();
                let mut jac = DMatrix::zeros(n, n);
                for i in 0..n {
                    let mut pa = p.to_vec();
                    let mut pb = p.to_vec();
                    pa[i] += h;
                    pb[i] -= h;
                    let fa = flow(&x, &pa, s, 8);
                    let fb = flow(&x, &pb, s, 8);
                    for a in 0..n {
                        jac[(a, i)] = (fa[a] - fb[a]) / (2.0 * h);
                    }
                }
                jac.transpose() * av
            };
            let fd = (pull(t) - pull(-t)) / (2.0 * t);
            let an = lie.at(&p);
            assert!((fd - &an).norm() < 1e-5 * an.norm().max(1.0), "at {p:?}");
        }
    }

    #[test]
    fn pullback_examples() {
        // Interior product against a constant symplectic form.
        let c = Chart::new("ph", &["x", "p_x"], &[(-2.0, 2.0); 2]).unwrap();
        let omega = TwoForm::from_upper(&c, &[(0, 1, ScalarField::constant(&c, 1.0))]);
        let dp = omega.interior(&VectorField::basis(&c, 0));
        let v = dp.at(&[0.3, 0.9]);
        assert!((v[1] - 1.0).abs() < 1e-15 && v[0].abs() < 1e-15);

        // Pullback under the identity is the identity.
        let id = PointMap::identity(&c);
        let back = id.pullback_two_form(&omega).unwrap();
        assert!((back.at(&[0.1, 0.2]) - omega.at(&[0.1, 0.2])).amax() < 1e-14);
    }

    #[test]
    fn field_system_solutions_carry_jets() {
        let c = chart_xy();
        let p = [0.6, -0.8];
        // [[1, x],[0,1]] u = (y, x)  =>  u0 = y − x², u1 = x.
        let a = vec![
            vec![
                ScalarField::constant(&c, 1.0),
                ScalarField::coordinate(&c, 0),
            ],
            vec![ScalarField::zero(&c), ScalarField::constant(&c, 1.0)],
        ];
        let b = vec![ScalarField::coordinate(&c, 1), ScalarField::coordinate(&c, 0)];
        let sol = solve_field_system(a, b).unwrap();
        assert!((sol[0].value(&p) - (p[1] - p[0] * p[0])).abs() < 1e-14);
        let g = sol[0].gradient(&p);
        assert!((g[0] + 2.0 * p[0]).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
    }
}
