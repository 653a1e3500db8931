//! Long-format trajectory export: `time,entity,series,value`.

use std::io::{self, Write};

use bireg_core::Trajectory;

pub const CSV_HEADER: &str = "time,entity,series,value";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per scalar: leader `v<k>`, then per agent `eta<k>`, `x<k>`, `u`
/// and `e`. Agents are numbered from 1.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for k in 0..traj.len() {
        let t = format_value(traj.times[k]);
        for (c, v) in traj.leader_at(k).iter().enumerate() {
            writeln!(w, "{t},leader,v{},{}", c + 1, format_value(*v))?;
        }
        for i in 0..traj.n_followers {
            let entity = format!("agent{}", i + 1);
            for (c, e) in traj.eta_at(k, i).iter().enumerate() {
                writeln!(w, "{t},{entity},eta{},{}", c + 1, format_value(*e))?;
            }
            if traj.has_agents() {
                for (c, x) in traj.x_at(k, i).iter().enumerate() {
                    writeln!(w, "{t},{entity},x{},{}", c + 1, format_value(*x))?;
                }
                writeln!(w, "{t},{entity},u,{}", format_value(traj.u_at(k, i)))?;
                writeln!(w, "{t},{entity},e,{}", format_value(traj.e_at(k, i)))?;
            }
        }
    }
    w.flush()
}
