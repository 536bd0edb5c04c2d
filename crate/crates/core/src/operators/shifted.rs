use num_complex::Complex64;
use num_traits::Zero;

use super::diagonal::PositiveDiagonalModel;
use super::matrix::FiniteMatrix;
use super::ModelError;
use crate::exact::{to_f64, Q};

/// Which side of the positive diagonal the shift power sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftForm {
    /// `T = Sᵏ D`.
    Isometric,
    /// `T = D S*ᵏ`.
    CoIsometric,
}

/// Unilateral shift power composed with a positive diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedDiagonalModel {
    shift_order: u64,
    diag: PositiveDiagonalModel,
    form: ShiftForm,
}

impl ShiftedDiagonalModel {
    /// `T = Sᵏ D`.
    pub fn new(shift_order: u64, diag: PositiveDiagonalModel) -> Self {
        Self {
            shift_order,
            diag,
            form: ShiftForm::Isometric,
        }
    }

    pub fn with_form(shift_order: u64, diag: PositiveDiagonalModel, form: ShiftForm) -> Self {
        Self {
            shift_order,
            diag,
            form,
        }
    }

    pub fn shift_order(&self) -> u64 {
        self.shift_order
    }

    pub fn diag(&self) -> &PositiveDiagonalModel {
        &self.diag
    }

    pub fn form(&self) -> ShiftForm {
        self.form
    }

    pub fn truncate(&self, n: u64) -> FiniteMatrix {
        let size = n as usize;
        let k = self.shift_order as usize;
        let mut m = FiniteMatrix::zeros(size, size);
        for (i, d) in self.diag.entries(n).iter().enumerate() {
            if i + k >= size {
                break;
            }
            let v = Complex64::new(to_f64(d), 0.0);
            match self.form {
                ShiftForm::Isometric => m.set(i + k, i, v),
                ShiftForm::CoIsometric => m.set(i, i + k, v),
            }
        }
        m
    }

    /// The shift is an isometry, so `‖T‖ = ‖D‖`.
    pub fn operator_norm(&self) -> Q {
        self.diag.operator_norm()
    }

    pub fn min_modulus(&self) -> Q {
        match self.form {
            ShiftForm::CoIsometric if self.shift_order > 0 => Q::zero(),
            _ => self.diag.min_modulus(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.clone().adjoint_form()
    }

    /// `(SᵏD)† = D† S*ᵏ` and `(D S*ᵏ)† = Sᵏ D†`.
    pub fn pseudoinverse(&self) -> Result<Self, ModelError> {
        Ok(Self {
            diag: self.diag.pseudoinverse()?,
            ..self.clone()
        }
        .adjoint_form())
    }

    fn adjoint_form(self) -> Self {
        let form = match self.form {
            ShiftForm::Isometric => ShiftForm::CoIsometric,
            ShiftForm::CoIsometric => ShiftForm::Isometric,
        };
        Self { form, ..self }
    }

    /// `(T*T, TT*)` as positive diagonal models.
    pub fn gram_pair(&self) -> (PositiveDiagonalModel, PositiveDiagonalModel) {
        let squared = self.diag.squared();
        let padded = squared.with_zero_padding(self.shift_order);
        match self.form {
            ShiftForm::Isometric => (squared, padded),
            ShiftForm::CoIsometric => (padded, squared),
        }
    }

    /// `|T| = √(T*T)`.
    pub fn modulus(&self) -> PositiveDiagonalModel {
        match self.form {
            ShiftForm::Isometric => self.diag.clone(),
            ShiftForm::CoIsometric => self.diag.with_zero_padding(self.shift_order),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::spectra::Multiplicity;

    fn identity() -> PositiveDiagonalModel {
        PositiveDiagonalModel::scalar(int(1))
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn truncated_right_shift() {
        let t = ShiftedDiagonalModel::new(1, identity()).truncate(3);
        let expected = FiniteMatrix::from_row_major(
            3,
            3,
            &[
                c(0.0),
                c(0.0),
                c(0.0),
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(1.0),
                c(0.0),
            ],
        )
        .unwrap();
        assert_eq!(t, expected);
    }

    #[test]
    fn adjoint_truncates_to_conjugate_transpose() {
        let m = ShiftedDiagonalModel::new(2, identity());
        assert_eq!(m.adjoint().truncate(5), m.truncate(5).adjoint());
    }

    #[test]
    fn gram_pair_pads_kernel() {
        let (tt, ttstar) = ShiftedDiagonalModel::new(1, identity()).gram_pair();
        assert_eq!(tt, identity());
        assert_eq!(
            ttstar.cells(),
            &[
                (int(0), Multiplicity::Finite(1)),
                (int(1), Multiplicity::Infinite)
            ]
        );
        let (a, b) = ShiftedDiagonalModel::new(0, identity()).gram_pair();
        assert_eq!(a, b);
    }

    #[test]
    fn norms_ignore_the_shift() {
        let d = PositiveDiagonalModel::new(
            vec![
                (int(3), Multiplicity::Finite(1)),
                (int(1), Multiplicity::Infinite),
            ],
            vec![],
        )
        .unwrap();
        let m = ShiftedDiagonalModel::new(1, d.clone());
        assert_eq!(m.operator_norm(), int(3));
        assert_eq!(m.min_modulus(), int(1));
        assert_eq!(m.adjoint().min_modulus(), int(0));
        assert_eq!(m.modulus(), d);
    }

    #[test]
    fn pseudoinverse_round_trip() {
        let m = ShiftedDiagonalModel::new(2, PositiveDiagonalModel::scalar(int(2)));
        let p = m.pseudoinverse().unwrap();
        assert_eq!(p.form(), ShiftForm::CoIsometric);
        assert_eq!(p.pseudoinverse().unwrap(), m);
    }
}
