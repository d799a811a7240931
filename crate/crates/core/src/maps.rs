//! Homeomorphisms of the base spaces.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::space::{BasePoint, BaseSpace};

/// A homeomorphism of a compact base space.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMap<S> {
    /// `x ↦ x + angle (mod 1)`. `irrational` records that the angle stands for an irrational
    /// number, which decides how periodic points are reported.
    CircleRotation { angle: S, irrational: bool },
    /// Left shift `(σx)_n = x_{n+1}` on windows of the given radius.
    BinaryShift { radius: u8 },
    /// Linear automorphism of the 2-torus with integer matrix of determinant ±1.
    ToralAutomorphism { matrix: [[i64; 2]; 2] },
}

/// Serializable parameters of a [`BaseMap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseMapKind {
    CircleRotation { angle: f64, irrational: bool },
    BinaryShift { radius: u8 },
    ToralAutomorphism { matrix: [[i64; 2]; 2] },
}

/// The golden rotation number `(√5 - 1)/2`.
pub fn golden_angle<S: Scalar>() -> S {
    (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0)
}

impl<S: Scalar> BaseMap<S> {
    pub fn toral(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
        if det.abs() != 1 {
            return invalid(format!("toral matrix {matrix:?} has determinant {det}, expected ±1"));
        }
        Ok(BaseMap::ToralAutomorphism { matrix })
    }

    pub fn cat_map() -> Self {
        BaseMap::ToralAutomorphism { matrix: [[2, 1], [1, 1]] }
    }

    pub fn from_kind(kind: BaseMapKind) -> Result<Self> {
        match kind {
            BaseMapKind::CircleRotation { angle, irrational } => {
                Ok(BaseMap::CircleRotation { angle: S::lit(angle), irrational })
            }
            BaseMapKind::BinaryShift { radius } => {
                crate::space::SymbolWindow::new(radius, 0)?;
                Ok(BaseMap::BinaryShift { radius })
            }
            BaseMapKind::ToralAutomorphism { matrix } => Self::toral(matrix),
        }
    }

    pub fn kind(&self) -> BaseMapKind {
        match self {
            BaseMap::CircleRotation { angle, irrational } => {
                BaseMapKind::CircleRotation { angle: angle.as_f64(), irrational: *irrational }
            }
            BaseMap::BinaryShift { radius } => BaseMapKind::BinaryShift { radius: *radius },
            BaseMap::ToralAutomorphism { matrix } => BaseMapKind::ToralAutomorphism { matrix: *matrix },
        }
    }

    pub fn space(&self) -> BaseSpace {
        match self {
            BaseMap::CircleRotation { .. } => BaseSpace::Circle,
            BaseMap::BinaryShift { radius } => BaseSpace::Shift { radius: *radius },
            BaseMap::ToralAutomorphism { .. } => BaseSpace::Torus,
        }
    }

    pub fn name(&self) -> String {
        match self {
            BaseMap::CircleRotation { angle, .. } => format!("circle rotation by {angle}"),
            BaseMap::BinaryShift { radius } => format!("binary shift (W={radius})"),
            BaseMap::ToralAutomorphism { matrix } => format!("toral automorphism {matrix:?}"),
        }
    }

    /// `f^n(x)` for any integer `n`.
    pub fn iterate(&self, x: &BasePoint<S>, n: i64) -> BasePoint<S> {
        match (self, x) {
            (_, _) if n == 0 => *x,
            (BaseMap::CircleRotation { angle, .. }, BasePoint::Circle(c)) => {
                BasePoint::circle(*c + *angle * S::lit(n as f64))
            }
            (BaseMap::BinaryShift { .. }, BasePoint::Word(w)) => BasePoint::Word(w.shifted(n)),
            (BaseMap::ToralAutomorphism { matrix }, BasePoint::Torus(_)) => {
                let m = if n > 0 { *matrix } else { inverse_matrix(matrix) };
                let mut p = *x;
                for _ in 0..n.unsigned_abs() {
                    p = apply_matrix(&m, &p);
                }
                p
            }
            _ => panic!("{x:?} is not a point of {}", self.name()),
        }
    }

    pub fn forward(&self, x: &BasePoint<S>) -> BasePoint<S> {
        self.iterate(x, 1)
    }

    pub fn inverse(&self, x: &BasePoint<S>) -> BasePoint<S> {
        self.iterate(x, -1)
    }

    pub fn check(&self, x: &BasePoint<S>) -> Result<()> {
        if self.space().contains(x) {
            Ok(())
        } else {
            invalid(format!("{x:?} is not a point of {}", self.name()))
        }
    }

    /// Lipschitz constant of `f` for the base metric (used to bound moduli of continuity).
    pub fn lipschitz(&self) -> S {
        match self {
            BaseMap::CircleRotation { .. } => S::one(),
            BaseMap::BinaryShift { .. } => S::lit(2.0),
            BaseMap::ToralAutomorphism { matrix } => {
                let row = |r: &[i64; 2]| (r[0].abs() + r[1].abs()) as f64;
                S::lit(row(&matrix[0]).max(row(&matrix[1])))
            }
        }
    }
}

fn inverse_matrix(m: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] * det, -m[0][1] * det], [-m[1][0] * det, m[0][0] * det]]
}

fn apply_matrix<S: Scalar>(m: &[[i64; 2]; 2], p: &BasePoint<S>) -> BasePoint<S> {
    let BasePoint::Torus([x, y]) = p else { unreachable!("toral map on non-torus point") };
    let c = |v: i64| S::lit(v as f64);
    BasePoint::torus(c(m[0][0]) * *x + c(m[0][1]) * *y, c(m[1][0]) * *x + c(m[1][1]) * *y)
}
