use rand::{Rng, RngCore};

use super::alphabet::{Sequence, END, START};
use super::pst::{magnitude, Pst};
use crate::{Error, Result};

/// Sample `count` synthetic sequences.
///
/// Each starts from `$` and repeatedly draws the next symbol from the
/// normalized histogram of the longest-suffix node of what has been
/// generated so far, until the end marker is drawn or `l_max` symbols have
/// been produced (the sequence is then left open-ended, like a truncated
/// input). A sequence that reaches an empty histogram is dropped, so fewer
/// than `count` sequences may come back.
pub fn generate_sequences<R: RngCore + ?Sized>(pst: &Pst, count: usize, rng: &mut R) -> Result<Vec<Sequence>> {
    let root = pst.hist(pst.root()).ok_or_else(|| Error::input("PST carries no histograms"))?;
    if magnitude(root) <= 0.0 {
        return Err(Error::input("root histogram is empty; nothing to sample"));
    }
    let predicted: Vec<_> = pst.alphabet().predicted().collect();
    let mut out = Vec::with_capacity(count);
    'outer: for _ in 0..count {
        let mut context = vec![START];
        loop {
            if context.len() > pst.l_max() {
                out.push(Sequence { symbols: context.split_off(1), terminated: false });
                continue 'outer;
            }
            let h = pst.hist(pst.longest_suffix_node(&context)).unwrap_or(root);
            let mag = magnitude(h);
            if mag <= 0.0 {
                continue 'outer;
            }
            let mut u = rng.random::<f64>() * mag;
            // fall back to the last positive entry if rounding overshoots
            let mut next = None;
            for &s in &predicted {
                let c = h[s as usize];
                if c > 0.0 {
                    next = Some(s);
                    if u < c {
                        break;
                    }
                    u -= c;
                }
            }
            match next {
                Some(END) => {
                    out.push(Sequence { symbols: context.split_off(1), terminated: true });
                    continue 'outer;
                }
                Some(s) => context.push(s),
                None => continue 'outer,
            }
        }
    }
    Ok(out)
}
