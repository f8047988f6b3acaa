//! Cell layout: home BS at the origin, RRUs on a ring, users uniform in the
//! disk.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;

use crate::{Error, Result};

/// A point in the azimuth plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Point {
            x: radius * angle.cos(),
            y: radius * angle.sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance and bearing (in `[0, 2π)`) of `to` as seen from `from`.
pub fn link(from: Point, to: Point) -> (f64, f64) {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    (dx.hypot(dy), wrap_angle(dy.atan2(dx)))
}

/// RRU positions: `n` points at angles `2πi/n + rotation` on a circle of
/// radius `d0`.
pub fn place_rrus(n: usize, d0: f64, rotation: f64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::invalid("RRU count must be at least 1"));
    }
    if !(d0 > 0.0 && d0.is_finite()) {
        return Err(Error::invalid(format!(
            "RRU ring radius must be positive, got {d0}"
        )));
    }
    Ok((0..n)
        .map(|i| Point::polar(d0, TAU * i as f64 / n as f64 + rotation))
        .collect())
}

/// `k` i.i.d. points uniform over the disk of radius `d`.
pub fn place_users<R: Rng + ?Sized>(k: usize, d: f64, rng: &mut R) -> Result<Vec<Point>> {
    if k == 0 {
        return Err(Error::invalid("user count must be at least 1"));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid(format!(
            "cell radius must be positive, got {d}"
        )));
    }
    Ok((0..k)
        .map(|_| {
            let u: f64 = rng.random();
            let phi: f64 = rng.random::<f64>() * TAU;
            Point::polar(d * u.sqrt(), phi)
        })
        .collect())
}

/// Positions of the home BS, the RRUs and the users of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTopology {
    cell_radius_m: f64,
    rru_ring_radius_m: f64,
    rru_positions: Vec<Point>,
    user_positions: Vec<Point>,
}

impl CellTopology {
    /// Validates and assembles a topology. RRUs must sit on the ring, users
    /// inside the cell, and there must be as many users as RRUs.
    pub fn new(
        cell_radius_m: f64,
        rru_ring_radius_m: f64,
        rru_positions: Vec<Point>,
        user_positions: Vec<Point>,
    ) -> Result<Self> {
        if !(cell_radius_m > 0.0) || !(rru_ring_radius_m > 0.0) {
            return Err(Error::invalid("cell and ring radii must be positive"));
        }
        if rru_positions.len() != user_positions.len() {
            return Err(Error::invalid(format!(
                "need as many users as RRUs, got {} RRUs and {} users",
                rru_positions.len(),
                user_positions.len()
            )));
        }
        if rru_positions.is_empty() {
            return Err(Error::invalid("topology needs at least one RRU"));
        }
        for (i, p) in rru_positions.iter().enumerate() {
            if (p.norm() - rru_ring_radius_m).abs() > 1e-9 * rru_ring_radius_m {
                return Err(Error::invalid(format!("RRU {i} is off the ring")));
            }
        }
        for (i, p) in user_positions.iter().enumerate() {
            if p.norm() > cell_radius_m {
                return Err(Error::invalid(format!("user {i} lies outside the cell")));
            }
        }
        Ok(CellTopology {
            cell_radius_m,
            rru_ring_radius_m,
            rru_positions,
            user_positions,
        })
    }

    /// Regular RRU ring plus a fresh draw of users.
    pub fn generate<R: Rng + ?Sized>(
        cell_radius_m: f64,
        rru_ring_radius_m: f64,
        count: usize,
        rotation: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let rrus = place_rrus(count, rru_ring_radius_m, rotation)?;
        let users = place_users(count, cell_radius_m, rng)?;
        Self::new(cell_radius_m, rru_ring_radius_m, rrus, users)
    }

    /// Same RRUs, new users. RRUs stay fixed for an experiment while users
    /// are redrawn every trial.
    pub fn with_users(&self, user_positions: Vec<Point>) -> Result<Self> {
        Self::new(
            self.cell_radius_m,
            self.rru_ring_radius_m,
            self.rru_positions.clone(),
            user_positions,
        )
    }

    pub fn cell_radius_m(&self) -> f64 {
        self.cell_radius_m
    }

    pub fn rru_ring_radius_m(&self) -> f64 {
        self.rru_ring_radius_m
    }

    pub fn bs_position(&self) -> Point {
        Point::ORIGIN
    }

    pub fn rru_positions(&self) -> &[Point] {
        &self.rru_positions
    }

    pub fn user_positions(&self) -> &[Point] {
        &self.user_positions
    }

    pub fn num_rrus(&self) -> usize {
        self.rru_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    /// Distance and bearing of user `k` as seen from RRU `n`.
    pub fn pair_geometry(&self, n: usize, k: usize) -> Result<(f64, f64)> {
        let rru = *self.rru_positions.get(n).ok_or(Error::IndexOutOfRange {
            what: "RRU",
            index: n,
            len: self.rru_positions.len(),
        })?;
        let user = *self.user_positions.get(k).ok_or(Error::IndexOutOfRange {
            what: "user",
            index: k,
            len: self.user_positions.len(),
        })?;
        Ok(link(rru, user))
    }

    /// Distance and bearing of user `k` as seen from the cell center, where
    /// the centralized baseline colocates its subarrays.
    pub fn center_geometry(&self, k: usize) -> Result<(f64, f64)> {
        let user = *self.user_positions.get(k).ok_or(Error::IndexOutOfRange {
            what: "user",
            index: k,
            len: self.user_positions.len(),
        })?;
        Ok(link(Point::ORIGIN, user))
    }

    /// Debug dump with columns `entity,index,x_m,y_m`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["entity", "index", "x_m", "y_m"])?;
        w.write_record(["bs", "0", "0", "0"])?;
        for (entity, points) in [("rru", &self.rru_positions), ("user", &self.user_positions)] {
            for (i, p) in points.iter().enumerate() {
                w.write_record([
                    entity.to_string(),
                    i.to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<topology csv>", e))?;
        Ok(())
    }
}
