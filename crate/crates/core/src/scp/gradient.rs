//! Exact F2 gradients through the piecewise-constant propagator.

use nalgebra::allocator::Allocator;
use nalgebra::{DefaultAllocator, Dim, DimDiff, DimSub, Dyn, OMatrix, OVector, SymmetricEigen, U1, U2, U3};

use crate::qmodel::{ControlOperators, ErrorSample, TransmonModel};
use crate::signal::{ControlSet, Signal, TransferMatrix};
use crate::{CMatrix, Error, Result, C64};

/// Forward pass for one error sample, kept so an accepted trial point can be
/// differentiated without propagating again. Two- and three-level models run
/// on stack-allocated matrices.
#[derive(Clone, Debug)]
pub struct ForwardPass(Dispatch);

#[derive(Clone, Debug)]
enum Dispatch {
    Two(Pass<U2>),
    Three(Pass<U3>),
    Any(Pass<Dyn>),
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $body:expr) => {
        match &$self.0 {
            Dispatch::Two($p) => $body,
            Dispatch::Three($p) => $body,
            Dispatch::Any($p) => $body,
        }
    };
}

impl ForwardPass {
    pub fn new(model: &TransmonModel, signal: &Signal, error: ErrorSample) -> Result<Self> {
        signal.validate()?;
        let ops = model.operators(error);
        let inner = match model.num_levels() {
            2 => Dispatch::Two(Pass::new(U2, &ops, signal)),
            3 => Dispatch::Three(Pass::new(U3, &ops, signal)),
            n => Dispatch::Any(Pass::new(Dyn(n), &ops, signal)),
        };
        let pass = Self(inner);
        if dispatch!(pass, p => p.final_unitary().iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
            return Err(Error::Numerical("propagator is not finite".into()));
        }
        Ok(pass)
    }

    pub fn final_unitary(&self) -> CMatrix {
        dispatch!(self, p => {
            let u = p.final_unitary();
            CMatrix::from_iterator(u.nrows(), u.ncols(), u.iter().cloned())
        })
    }

    pub fn f2(&self, target: &CMatrix) -> f64 {
        dispatch!(self, p => p.overlap(&p.convert(target)).norm_sqr() / 4.0)
    }

    /// F2 and its gradient with respect to every signal sample of both
    /// channels.
    pub fn f2_signal_gradient(&self, target: &CMatrix) -> (f64, Vec<f64>, Vec<f64>) {
        dispatch!(self, p => p.f2_signal_gradient(&p.convert(target)))
    }
}

#[derive(Clone, Debug)]
struct Pass<D: Dim>
where
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    dim: D,
    hx: OMatrix<C64, D, D>,
    hy: OMatrix<C64, D, D>,
    dt: f64,
    phases: Vec<OVector<f64, D>>,
    vectors: Vec<OMatrix<C64, D, D>>,
    propagators: Vec<OMatrix<C64, D, D>>,
    /// `prefix[k] = U_{k−1} ⋯ U_0`, with `prefix[0] = I`.
    prefix: Vec<OMatrix<C64, D, D>>,
}

impl<D> Pass<D>
where
    D: DimSub<U1>,
    DefaultAllocator: Allocator<D, D> + Allocator<D> + Allocator<DimDiff<D, U1>>,
{
    fn new(dim: D, ops: &ControlOperators, signal: &Signal) -> Self {
        let conv = |m: &CMatrix| OMatrix::<C64, D, D>::from_iterator_generic(dim, dim, m.iter().cloned());
        let (drift, hx, hy) = (conv(&ops.drift), conv(&ops.hx), conv(&ops.hy));
        let dt = signal.dt();
        let len = signal.len();
        let mut pass = Self {
            dim,
            hx,
            hy,
            dt,
            phases: Vec::with_capacity(len),
            vectors: Vec::with_capacity(len),
            propagators: Vec::with_capacity(len),
            prefix: Vec::with_capacity(len + 1),
        };
        pass.prefix.push(OMatrix::identity_generic(dim, dim));
        let cdt = C64::new(dt, 0.0);
        for (&ex, &ey) in signal.ex().iter().zip(signal.ey()) {
            let h = &drift + &pass.hx * C64::new(ex, 0.0) + &pass.hy * C64::new(ey, 0.0);
            let eig = SymmetricEigen::new(h * cdt);
            let mut scaled = eig.eigenvectors.clone();
            for (k, mut col) in scaled.column_iter_mut().enumerate() {
                col *= C64::from_polar(1.0, -eig.eigenvalues[k]);
            }
            let u = &scaled * eig.eigenvectors.adjoint();
            let next = &u * pass.prefix.last().expect("non-empty");
            pass.prefix.push(next);
            pass.propagators.push(u);
            pass.phases.push(eig.eigenvalues);
            pass.vectors.push(eig.eigenvectors);
        }
        pass
    }

    fn convert(&self, m: &CMatrix) -> OMatrix<C64, D, D> {
        OMatrix::from_iterator_generic(self.dim, self.dim, m.iter().cloned())
    }

    fn final_unitary(&self) -> &OMatrix<C64, D, D> {
        self.prefix.last().expect("non-empty")
    }

    /// `tr(P·U_T†·U)` over the qubit block.
    fn overlap(&self, target: &OMatrix<C64, D, D>) -> C64 {
        let u = self.final_unitary();
        (0..2).map(|j| target.column(j).dotc(&u.column(j))).sum()
    }

    fn f2_signal_gradient(&self, target: &OMatrix<C64, D, D>) -> (f64, Vec<f64>, Vec<f64>) {
        let h = self.overlap(target);
        let n = self.dim.value();
        let len = self.propagators.len();
        // G = P·U_T†·(U_{N−1} ⋯ U_{k+1}), built from the right end.
        let mut g = OMatrix::<C64, D, D>::zeros_generic(self.dim, self.dim);
        for r in 0..2 {
            for c in 0..n {
                g[(r, c)] = target[(c, r)].conj();
            }
        }
        let mut gx = vec![0.0; len];
        let mut gy = vec![0.0; len];
        let hc = h.conj();
        for k in (0..len).rev() {
            let v = &self.vectors[k];
            let vh = v.adjoint();
            // dh = tr(W·dU_k) with W = prefix[k]·G.
            let y = &vh * (&self.prefix[k] * &g) * v;
            let xx = &vh * &self.hx * v;
            let xy = &vh * &self.hy * v;
            let e = &self.phases[k];
            let (mut dx, mut dy) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for a in 0..n {
                for b in 0..n {
                    let phi = loewner_entry(e[a], e[b], self.dt);
                    let w = y[(b, a)] * phi;
                    dx += w * xx[(a, b)];
                    dy += w * xy[(a, b)];
                }
            }
            gx[k] = 0.5 * (hc * dx).re;
            gy[k] = 0.5 * (hc * dy).re;
            g = &g * &self.propagators[k];
        }
        (h.norm_sqr() / 4.0, gx, gy)
    }
}

/// Divided difference of `exp(−i e)` between two eigen-phases, times `dt`.
fn loewner_entry(ea: f64, eb: f64, dt: f64) -> C64 {
    let half = 0.5 * (ea - eb);
    let sinc = if half.abs() < 1e-4 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    C64::new(0.0, -dt) * C64::from_polar(sinc, -0.5 * (ea + eb))
}

/// F2 of `controls` for one error sample and its exact gradient over
/// `[cx; cy]`.
pub fn gradient(
    model: &TransmonModel,
    tm: &TransferMatrix,
    controls: &ControlSet,
    error: ErrorSample,
    target: &CMatrix,
) -> Result<(f64, Vec<f64>)> {
    let signal = tm.apply(controls)?;
    let pass = ForwardPass::new(model, &signal, error).map_err(|e| dump(e, controls))?;
    let (f, gx, gy) = pass.f2_signal_gradient(target);
    let grad = tm.pullback(&gx, &gy);
    if !f.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(dump(Error::Numerical("non-finite gradient".into()), controls));
    }
    Ok((f, grad))
}

/// Attaches the offending iterate to a numerical error.
pub(crate) fn dump(err: Error, controls: &ControlSet) -> Error {
    match err {
        Error::Numerical(msg) => Error::Numerical(format!(
            "{msg}; iterate cx = {:?}, cy = {:?}",
            controls.cx, controls.cy
        )),
        other => other,
    }
}
