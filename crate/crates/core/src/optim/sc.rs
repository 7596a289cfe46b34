use crate::phy::AssociationMap;

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Strongest-channel association. `strengths[k][n] = ||h_{n,k}||^2`.
pub fn sc_associate(strengths: &[Vec<f64>], num_bs: usize) -> AssociationMap {
    let varrho = strengths.iter().map(|row| argmax(row)).collect();
    AssociationMap::new(varrho, num_bs).expect("argmax stays in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bs_takes_everyone() {
        let s = vec![vec![0.3], vec![1.0], vec![0.0]];
        assert_eq!(sc_associate(&s, 1).as_slice(), &[0, 0, 0]);
    }

    #[test]
    fn ties_go_low() {
        let s = vec![vec![1.0, 1.0, 0.5], vec![0.1, 2.0, 2.0]];
        assert_eq!(sc_associate(&s, 3).as_slice(), &[0, 1]);
    }
}
