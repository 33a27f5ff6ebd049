use serde::{Deserialize, Serialize};

use super::{check_positive, TemplateError};
use crate::registry::DeviceSpec;

pub const DEFAULT_VELCRO_MM: f64 = 20.0;
pub const DEFAULT_CARDBOARD_MM: f64 = 2.0;

/// Strap dimensions for the two-phone cardboard holder.
///
/// Straps 1, 3 and 5 wrap the phone: one fold over the thickness plus the
/// cardboard fold allowance, across the width, down the far side, then the
/// Velcro overlap. Strap 2 only wraps the near edge. Strap 4 is one phone
/// thickness wide because the phones sit back to back, not face to face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrapSet {
    /// Straps 1, 3, 5: `V + (H + M) + W + H`.
    pub long_strap_length: f64,
    /// Strap 2: `V + (H + M)`.
    pub short_strap_length: f64,
    /// Strap 4: `H`.
    pub strap4_width: f64,
    pub velcro_length: f64,
    pub cardboard_thickness: f64,
    /// Thickness H the straps were sized for.
    pub phone_thickness: f64,
    /// Span W the long straps wrap across.
    pub wrap_width: f64,
}

pub fn strap_lengths(spec: &DeviceSpec, velcro: f64, cardboard: f64) -> Result<StrapSet, TemplateError> {
    strap_lengths_for_span(spec.body_thickness, spec.body_width, velcro, cardboard)
}

/// Strap set for a phone of thickness `h` wrapped across a span `w`.
pub fn strap_lengths_for_span(h: f64, w: f64, velcro: f64, cardboard: f64) -> Result<StrapSet, TemplateError> {
    check_positive("velcro length", velcro)?;
    check_positive("cardboard thickness", cardboard)?;
    check_positive("phone thickness", h)?;
    check_positive("wrap width", w)?;
    Ok(StrapSet {
        long_strap_length: velcro + (h + cardboard) + w + h,
        short_strap_length: velcro + (h + cardboard),
        strap4_width: h,
        velcro_length: velcro,
        cardboard_thickness: cardboard,
        phone_thickness: h,
        wrap_width: w,
    })
}

impl StrapSet {
    /// Crease positions along a long strap, measured from its attachment.
    pub fn long_creases(&self) -> [f64; 3] {
        let h = self.phone_thickness;
        let first = h + self.cardboard_thickness;
        [first, first + self.wrap_width, first + self.wrap_width + h]
    }

    pub fn short_creases(&self) -> [f64; 1] {
        [self.phone_thickness + self.cardboard_thickness]
    }
}
