use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Rectangular room with one frequency-independent absorption coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomSpec {
    /// (x, y, z) extent in meters.
    pub dimensions: [f64; 3],
    pub absorption: f64,
    pub max_order: u32,
    pub speed_of_sound: f64,
}

impl RoomSpec {
    pub fn new(dimensions: [f64; 3], absorption: f64, max_order: u32) -> Result<Self> {
        let room = RoomSpec {
            dimensions,
            absorption,
            max_order,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Geometry(format!("room dimensions must be > 0: {:?}", self.dimensions)));
        }
        if !(self.absorption > 0.0 && self.absorption < 1.0) {
            return Err(Error::Geometry(format!("absorption must be in (0, 1), got {}", self.absorption)));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::Geometry(format!("speed of sound must be > 0, got {}", self.speed_of_sound)));
        }
        Ok(())
    }

    pub fn contains(&self, point: &[f64; 3]) -> bool {
        point
            .iter()
            .zip(&self.dimensions)
            .all(|(&p, &d)| p > 0.0 && p < d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub sample_rate: u32,
    pub taps: Vec<f64>,
}

impl ImpulseResponse {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }
}

/// Coordinate of the image with signed reflection index `m` along one axis.
/// Even indices translate the source, odd indices mirror it; `|m|` is the
/// number of wall reflections.
fn image_coordinate(source: f64, length: f64, m: i64) -> f64 {
    if m % 2 == 0 {
        source + m as f64 * length
    } else {
        -source + (m + 1) as f64 * length
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Image-source impulse response of a shoebox room.
///
/// Every image with at most `max_order` reflections contributes a tap of
/// amplitude `(1 - absorption)^order / (4π d)` at sample `round(d / c · fs)`.
/// The response is as long as its latest tap.
pub fn image_method_rir(room: &RoomSpec, source: [f64; 3], mic: [f64; 3], sample_rate: u32) -> Result<ImpulseResponse> {
    room.validate()?;
    if !room.contains(&source) {
        return Err(Error::Geometry(format!("source {source:?} is not inside the room")));
    }
    if !room.contains(&mic) {
        return Err(Error::Geometry(format!("microphone {mic:?} is not inside the room")));
    }
    if distance(&source, &mic) < 1e-9 {
        return Err(Error::Geometry("source and microphone coincide".into()));
    }

    let n = i64::from(room.max_order);
    let reflection = 1.0 - room.absorption;
    let samples_per_meter = f64::from(sample_rate) / room.speed_of_sound;
    let mut images: Vec<(usize, f64)> = Vec::new();
    for mx in -n..=n {
        for my in -(n - mx.abs())..=(n - mx.abs()) {
            let rest = n - mx.abs() - my.abs();
            for mz in -rest..=rest {
                let image = [
                    image_coordinate(source[0], room.dimensions[0], mx),
                    image_coordinate(source[1], room.dimensions[1], my),
                    image_coordinate(source[2], room.dimensions[2], mz),
                ];
                let d = distance(&image, &mic);
                let order = (mx.abs() + my.abs() + mz.abs()) as i32;
                let amplitude = reflection.powi(order) / (4.0 * PI * d);
                images.push(((d * samples_per_meter).round() as usize, amplitude));
            }
        }
    }
    let len = images.iter().map(|&(delay, _)| delay).max().unwrap_or(0) + 1;
    let mut taps = vec![0.0; len];
    for (delay, amplitude) in images {
        taps[delay] += amplitude;
    }
    Ok(ImpulseResponse { sample_rate, taps })
}
