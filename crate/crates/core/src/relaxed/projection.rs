//! Euclidean projections onto the per-file feasible sets of the relaxation.

/// Pin marker for a free entry.
pub(crate) const FREE: i8 = -1;

/// Projects `y` onto `{z ≥ 0, Σ z = total}` in place.
pub(crate) fn project_simplex(y: &mut [f64], total: f64) {
    if y.is_empty() {
        return;
    }
    if total <= 0.0 {
        y.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (idx + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    y.iter_mut().for_each(|v| *v = (*v - tau).max(0.0));
}

/// Projects packet sizes of one file onto `{σ ≥ 0, lo ≤ Σσ ≤ hi}`.
pub(crate) fn project_sizes(y: &mut [f64], lo: f64, hi: f64) {
    let clipped: f64 = y.iter().map(|v| v.max(0.0)).sum();
    if clipped < lo {
        project_simplex(y, lo);
    } else if clipped > hi {
        project_simplex(y, hi);
    } else {
        y.iter_mut().for_each(|v| *v = v.max(0.0));
    }
}

/// Per-packet free capacity `1 − Σ pinned`, or `None` when pins overfill it.
fn packet_room(pins: &[i8]) -> Option<f64> {
    let ones = pins.iter().filter(|&&p| p == 1).count();
    (ones <= 1).then_some(1.0 - ones as f64)
}

/// Packet total after shifting free entries by `mu` and capping them at `room`.
fn packet_total(y: &[f64], pins: &[i8], room: f64, mu: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut pinned = 0.0;
    for (&v, &p) in y.iter().zip(pins) {
        if p == FREE {
            free_sum += (v + mu).max(0.0);
        } else {
            pinned += p as f64;
        }
    }
    pinned + free_sum.min(room)
}

/// Writes the projection of one shifted packet onto `{z ≥ 0, Σ z ≤ room}`.
fn write_packet(y: &mut [f64], pins: &[i8], room: f64, mu: f64, scratch: &mut Vec<f64>) {
    let mut free_sum = 0.0;
    for (v, &p) in y.iter_mut().zip(pins) {
        if p == FREE {
            *v = (*v + mu).max(0.0);
            free_sum += *v;
        } else {
            *v = p as f64;
        }
    }
    if free_sum <= room {
        return;
    }
    scratch.clear();
    scratch.extend(
        y.iter()
            .zip(pins)
            .filter(|(_, &p)| p == FREE)
            .map(|(&v, _)| v),
    );
    project_simplex(scratch, room);
    let mut it = scratch.iter();
    for (v, &p) in y.iter_mut().zip(pins) {
        if p == FREE {
            *v = *it.next().unwrap_or(&0.0);
        }
    }
}

/// Shift at which the free entries of one packet sum to `room`.
fn saturation_shift(y: &[f64], pins: &[i8], room: f64, scratch: &mut Vec<f64>) -> Option<f64> {
    scratch.clear();
    scratch.extend(
        y.iter()
            .zip(pins)
            .filter(|(_, &p)| p == FREE)
            .map(|(&v, _)| v),
    );
    if scratch.is_empty() {
        return None;
    }
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    for (t, &v) in scratch.iter().enumerate() {
        cum += v;
        let mu = (room - cum) / (t + 1) as f64;
        let next_inactive = scratch.get(t + 1).is_none_or(|&w| w + mu <= 0.0);
        if v + mu >= 0.0 && next_inactive {
            return Some(mu);
        }
    }
    None
}

/// Projects the caching weights of one file (`n` packets of `servers` entries,
/// packet-major) onto `{0 ≤ m ≤ 1, Σ_k m_ki ≤ 1, Σ m ≥ lower}` with pinned
/// entries held fixed. Returns `false` when the set is empty.
///
/// The file total is a nondecreasing piecewise-linear function of a common
/// shift applied to the free entries, so the shift is found exactly from its
/// breakpoints.
pub(crate) fn project_file_weights(
    y: &mut [f64],
    pins: &[i8],
    servers: usize,
    lower: f64,
    scratch: &mut Vec<f64>,
) -> bool {
    let packets = y.len() / servers;
    let mut max_total = 0.0;
    let mut at_zero = 0.0;
    for i in 0..packets {
        let r = i * servers..(i + 1) * servers;
        let Some(room) = packet_room(&pins[r.clone()]) else {
            return false;
        };
        let has_free = pins[r.clone()].contains(&FREE);
        max_total += (1.0 - room) + if has_free { room } else { 0.0 };
        at_zero += packet_total(&y[r.clone()], &pins[r], room, 0.0);
    }
    if max_total < lower - 1e-12 {
        return false;
    }
    let room_of = |i: usize| packet_room(&pins[i * servers..(i + 1) * servers]).unwrap_or(0.0);
    let total_at = |y: &[f64], mu: f64| -> f64 {
        (0..packets)
            .map(|i| {
                let r = i * servers..(i + 1) * servers;
                packet_total(&y[r.clone()], &pins[r], room_of(i), mu)
            })
            .sum()
    };
    let mut packet_scratch = Vec::new();
    let mu = if at_zero >= lower {
        0.0
    } else {
        let target = lower.min(max_total);
        scratch.clear();
        for i in 0..packets {
            let r = i * servers..(i + 1) * servers;
            let room = room_of(i);
            for (&v, &p) in y[r.clone()].iter().zip(&pins[r.clone()]) {
                if p == FREE && -v > 0.0 {
                    scratch.push(-v);
                }
            }
            if let Some(sat) = saturation_shift(&y[r.clone()], &pins[r], room, &mut packet_scratch)
            {
                if sat > 0.0 {
                    scratch.push(sat);
                }
            }
        }
        scratch.sort_unstable_by(f64::total_cmp);
        scratch.dedup();
        // first breakpoint reaching the target; the total is linear on [prev, it]
        let idx = scratch.partition_point(|&b| total_at(y, b) < target);
        let hi = match scratch.get(idx) {
            Some(&b) => b,
            None => {
                let last = scratch.last().copied().unwrap_or(0.0);
                last + (target - total_at(y, last)).max(0.0) + 1.0
            }
        };
        let lo = if idx == 0 { 0.0 } else { scratch[idx - 1] };
        let (t_lo, t_hi) = (total_at(y, lo), total_at(y, hi));
        let mut mu = if t_hi > t_lo {
            (lo + (target - t_lo) * (hi - lo) / (t_hi - t_lo)).clamp(lo, hi)
        } else {
            hi
        };
        let mut nudge = f64::EPSILON * mu.abs().max(1.0);
        while total_at(y, mu) < target && mu < hi {
            mu = (mu + nudge).min(hi);
            nudge *= 4.0;
        }
        mu
    };
    for i in 0..packets {
        let r = i * servers..(i + 1) * servers;
        let room = room_of(i);
        write_packet(&mut y[r.clone()], &pins[r], room, mu, &mut packet_scratch);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_basic() {
        let mut y = vec![0.5, 0.5, 2.0];
        project_simplex(&mut y, 1.0);
        assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(y, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn sizes_respect_bounds() {
        let mut y = vec![-1.0, 0.1, 0.1];
        project_sizes(&mut y, 0.3, 0.7);
        assert!((y.iter().sum::<f64>() - 0.3).abs() < 1e-12);
        assert!(y.iter().all(|&v| v >= 0.0));
        let mut y = vec![1.0, 1.0];
        project_sizes(&mut y, 0.3, 0.7);
        assert!((y.iter().sum::<f64>() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn weights_meet_lower_bound() {
        let mut y = vec![0.1, 0.2, 0.0, -0.5];
        let pins = vec![FREE; 4];
        let mut scratch = Vec::new();
        assert!(project_file_weights(&mut y, &pins, 1, 2.5, &mut scratch));
        let total: f64 = y.iter().sum();
        assert!((2.5..2.5 + 1e-9).contains(&total));
        assert!(y.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn pins_are_kept_and_can_block() {
        let mut y = vec![0.7, 0.7, 0.7];
        let pins = vec![0, FREE, 1];
        let mut scratch = Vec::new();
        assert!(project_file_weights(&mut y, &pins, 1, 1.5, &mut scratch));
        assert_eq!(y[0], 0.0);
        assert_eq!(y[2], 1.0);
        let mut y = vec![0.7, 0.7];
        assert!(!project_file_weights(&mut y, &[0, 0], 1, 0.5, &mut scratch));
    }

    #[test]
    fn exact_shift_matches_dense_search() {
        let y = vec![0.3, -0.2, 0.9, 0.1, -0.7, 0.4];
        let pins = vec![FREE, FREE, FREE, 0, FREE, FREE];
        for &servers in &[1usize, 2] {
            let mut z = y.clone();
            let mut scratch = Vec::new();
            assert!(project_file_weights(
                &mut z,
                &pins,
                servers,
                2.2,
                &mut scratch
            ));
            let total: f64 = z.iter().sum();
            assert!((2.2..2.2 + 1e-9).contains(&total), "{total}");
            // stationarity: free entries strictly inside their box share one shift
            if servers == 1 {
                let shifts: Vec<f64> = z
                    .iter()
                    .zip(&y)
                    .zip(&pins)
                    .filter(|((&zv, _), &p)| p == FREE && zv > 1e-12 && zv < 1.0 - 1e-12)
                    .map(|((zv, yv), _)| zv - yv)
                    .collect();
                for w in shifts.windows(2) {
                    assert!((w[0] - w[1]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn packet_shared_across_servers() {
        let mut y = vec![0.9, 0.9, 0.0, 0.0];
        let pins = vec![FREE; 4];
        let mut scratch = Vec::new();
        assert!(project_file_weights(&mut y, &pins, 2, 0.0, &mut scratch));
        assert!((y[0] + y[1] - 1.0).abs() < 1e-12);
        let mut y = vec![0.5, 0.5];
        assert!(!project_file_weights(&mut y, &[1, 1], 2, 0.0, &mut scratch));
    }
}
