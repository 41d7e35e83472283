//! Vertical seam carving with dual-gradient energy.
//!
//! Energy is exact integer arithmetic so that ties are exact and the
//! carved output is a pure function of the input image and seam count.

use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeamError {
    #[error("image is only one column wide, no seam can be removed")]
    TooNarrow,
    #[error("seam has {len} entries but image has {rows} rows")]
    SeamLengthMismatch { len: usize, rows: usize },
    #[error("seam column {col} at row {row} is outside 0..{cols}")]
    SeamOutOfRange { row: usize, col: usize, cols: usize },
    #[error("seam jumps from column {from} to {to} at row {row}")]
    SeamNotConnected { row: usize, from: usize, to: usize },
    #[error("cannot remove {seams} seams from an image {cols} columns wide")]
    TooManySeams { seams: usize, cols: usize },
}

/// Per-pixel energy over an image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyMap {
    rows: usize,
    cols: usize,
    energy: Vec<u32>,
}

impl EnergyMap {
    /// Wraps raw energy values. Panics if `energy.len() != rows * cols` or a
    /// dimension is zero.
    pub fn from_values(rows: usize, cols: usize, energy: Vec<u32>) -> Self {
        assert!(rows >= 1 && cols >= 1, "energy map must be non-empty");
        assert_eq!(energy.len(), rows * cols, "energy map size mismatch");
        Self { rows, cols, energy }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[u32] {
        &self.energy
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.energy[row * self.cols + col]
    }
}

/// A vertical 8-connected path, one column per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seam {
    pub cols_by_row: Vec<usize>,
    pub total_energy: u64,
}

impl Seam {
    /// Checks the seam against an image of the given dimensions.
    pub fn validate(&self, rows: usize, cols: usize) -> Result<(), SeamError> {
        if self.cols_by_row.len() != rows {
            return Err(SeamError::SeamLengthMismatch {
                len: self.cols_by_row.len(),
                rows,
            });
        }
        for (row, &col) in self.cols_by_row.iter().enumerate() {
            if col >= cols {
                return Err(SeamError::SeamOutOfRange { row, col, cols });
            }
        }
        for (row, pair) in self.cols_by_row.windows(2).enumerate() {
            if pair[0].abs_diff(pair[1]) > 1 {
                return Err(SeamError::SeamNotConnected {
                    row: row + 1,
                    from: pair[0],
                    to: pair[1],
                });
            }
        }
        Ok(())
    }
}

/// Dual-gradient energy: squared central differences along both axes, with
/// out-of-range neighbours clamped to the border pixel.
pub fn energy_map(img: &GrayImage) -> EnergyMap {
    let (rows, cols) = (img.rows(), img.cols());
    let mut energy = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(rows - 1);
        for c in 0..cols {
            let left = c.saturating_sub(1);
            let right = (c + 1).min(cols - 1);
            let dx = i32::from(img.get(r, right)) - i32::from(img.get(r, left));
            let dy = i32::from(img.get(down, c)) - i32::from(img.get(up, c));
            energy.push((dx * dx + dy * dy) as u32);
        }
    }
    EnergyMap { rows, cols, energy }
}

/// Minimum-energy vertical seam by dynamic programming. Ties resolve to the
/// smallest column, both for the bottom-row start and at every backtrack step.
pub fn min_seam(em: &EnergyMap) -> Seam {
    let (rows, cols) = (em.rows, em.cols);
    let mut cum: Vec<u64> = Vec::with_capacity(rows * cols);
    cum.extend(em.energy[..cols].iter().map(|&e| u64::from(e)));
    for r in 1..rows {
        let prev = (r - 1) * cols;
        for c in 0..cols {
            let lo = c.saturating_sub(1);
            let hi = (c + 1).min(cols - 1);
            let best = cum[prev + lo..=prev + hi].iter().copied().min().unwrap();
            cum.push(best + u64::from(em.get(r, c)));
        }
    }

    let last = (rows - 1) * cols;
    let mut col = argmin_leftmost(&cum[last..last + cols]);
    let total_energy = cum[last + col];
    let mut cols_by_row = vec![0; rows];
    cols_by_row[rows - 1] = col;
    for r in (0..rows - 1).rev() {
        let lo = col.saturating_sub(1);
        let hi = (col + 1).min(cols - 1);
        col = lo + argmin_leftmost(&cum[r * cols + lo..=r * cols + hi]);
        cols_by_row[r] = col;
    }
    Seam {
        cols_by_row,
        total_energy,
    }
}

fn argmin_leftmost(values: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Deletes one pixel per row along `seam`.
pub fn remove_seam(img: &GrayImage, seam: &Seam) -> Result<GrayImage, SeamError> {
    let (rows, cols) = (img.rows(), img.cols());
    if cols < 2 {
        return Err(SeamError::TooNarrow);
    }
    seam.validate(rows, cols)?;
    let mut pixels = Vec::with_capacity(rows * (cols - 1));
    for (r, &skip) in seam.cols_by_row.iter().enumerate() {
        let row = img.row(r);
        pixels.extend_from_slice(&row[..skip]);
        pixels.extend_from_slice(&row[skip + 1..]);
    }
    Ok(GrayImage::new(rows, cols - 1, pixels).expect("dims preserved"))
}

/// Removes `seams` vertical seams, recomputing energy after each removal.
pub fn carve(img: &GrayImage, seams: usize) -> Result<GrayImage, SeamError> {
    carve_with(img, seams, |_, _| {})
}

/// Like [`carve`], calling `observe(energy, seam)` for every removed seam.
pub fn carve_with<F>(img: &GrayImage, seams: usize, mut observe: F) -> Result<GrayImage, SeamError>
where
    F: FnMut(&EnergyMap, &Seam),
{
    if seams >= img.cols() {
        return Err(SeamError::TooManySeams {
            seams,
            cols: img.cols(),
        });
    }
    let mut current = img.clone();
    for _ in 0..seams {
        let energy = energy_map(&current);
        let seam = min_seam(&energy);
        observe(&energy, &seam);
        current = remove_seam(&current, &seam)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> GrayImage {
        let px = (0..rows * cols).map(|_| rng.gen()).collect();
        GrayImage::new(rows, cols, px).unwrap()
    }

    #[test]
    fn constant_image_has_zero_energy() {
        for (r, c) in [(1, 1), (1, 7), (5, 1), (4, 9)] {
            let em = energy_map(&GrayImage::filled(r, c, 100).unwrap());
            assert!(em.values().iter().all(|&e| e == 0));
        }
    }

    #[test]
    fn single_pixel_energy() {
        let em = energy_map(&GrayImage::from_rows(&[[42]]));
        assert_eq!(em.values(), &[0]);
    }

    #[test]
    fn bright_center_energy() {
        // Hand evaluation per pixel: edge-adjacent neighbours of the centre
        // see a single clamped difference of 10; corners and the centre see none.
        let img = GrayImage::from_rows(&[[100, 100, 100], [100, 110, 100], [100, 100, 100]]);
        assert_eq!(
            energy_map(&img).values(),
            &[0, 100, 0, 100, 0, 100, 0, 100, 0]
        );
    }

    #[test]
    fn constant_energy_seam_is_leftmost() {
        let em = EnergyMap::from_values(4, 5, vec![3; 20]);
        let seam = min_seam(&em);
        assert_eq!(seam.cols_by_row, vec![0; 4]);
        assert_eq!(seam.total_energy, 12);
    }

    #[test]
    fn single_column_seam() {
        let em = EnergyMap::from_values(3, 1, vec![4, 1, 7]);
        let seam = min_seam(&em);
        assert_eq!(seam.cols_by_row, vec![0, 0, 0]);
        assert_eq!(seam.total_energy, 12);
    }

    #[test]
    fn follows_a_valley() {
        #[rustfmt::skip]
        let em = EnergyMap::from_values(3, 4, vec![
            9, 9, 0, 9,
            9, 0, 9, 9,
            0, 9, 9, 9,
        ]);
        let seam = min_seam(&em);
        assert_eq!(seam.cols_by_row, vec![2, 1, 0]);
        assert_eq!(seam.total_energy, 0);
    }

    #[test]
    fn remove_seam_examples() {
        let img = GrayImage::from_rows(&[[1, 2, 3], [4, 5, 6]]);
        let seam = Seam {
            cols_by_row: vec![1, 1],
            total_energy: 0,
        };
        assert_eq!(
            remove_seam(&img, &seam).unwrap(),
            GrayImage::from_rows(&[[1, 3], [4, 6]])
        );
        let seam = Seam {
            cols_by_row: vec![0],
            total_energy: 0,
        };
        assert_eq!(
            remove_seam(&GrayImage::from_rows(&[[9, 9]]), &seam).unwrap(),
            GrayImage::from_rows(&[[9]])
        );
    }

    #[test]
    fn remove_seam_errors() {
        let seam = |c: Vec<usize>| Seam {
            cols_by_row: c,
            total_energy: 0,
        };
        let narrow = GrayImage::from_rows(&[[1], [2]]);
        assert_eq!(
            remove_seam(&narrow, &seam(vec![0, 0])),
            Err(SeamError::TooNarrow)
        );
        let img = GrayImage::from_rows(&[[1, 2, 3], [4, 5, 6], [7, 8, 9]]);
        assert_eq!(
            remove_seam(&img, &seam(vec![0, 3, 2])),
            Err(SeamError::SeamOutOfRange {
                row: 1,
                col: 3,
                cols: 3
            })
        );
        assert_eq!(
            remove_seam(&img, &seam(vec![0, 1, 2, 2])),
            Err(SeamError::SeamLengthMismatch { len: 4, rows: 3 })
        );
        assert_eq!(
            remove_seam(&img, &seam(vec![0, 2, 2])),
            Err(SeamError::SeamNotConnected {
                row: 1,
                from: 0,
                to: 2
            })
        );
    }

    #[test]
    fn carve_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_image(&mut rng, 4, 6);
        assert_eq!(carve(&img, 0).unwrap(), img);
        let out = carve(&img, 5).unwrap();
        assert_eq!((out.rows(), out.cols()), (4, 1));
        assert_eq!(
            carve(&img, 6),
            Err(SeamError::TooManySeams { seams: 6, cols: 6 })
        );
    }

    #[test]
    fn carve_matches_stepwise_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (r, c) = (rng.gen_range(1..20), rng.gen_range(3..20));
            let img = random_image(&mut rng, r, c);
            let mut reference = img.clone();
            for _ in 0..2 {
                let seam = min_seam(&energy_map(&reference));
                reference = remove_seam(&reference, &seam).unwrap();
            }
            assert_eq!(carve(&img, 2).unwrap(), reference);
        }
    }

    /// Random valid path: uniform start, each step -1/0/+1 clamped to the grid.
    fn random_path(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<usize> {
        let mut path = vec![rng.gen_range(0..cols)];
        for _ in 1..rows {
            let c = *path.last().unwrap() as i64 + rng.gen_range(-1..=1);
            path.push(c.clamp(0, cols as i64 - 1) as usize);
        }
        path
    }

    #[test]
    fn dominates_random_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (r, c) = (rng.gen_range(1..=64), rng.gen_range(1..=64));
            let img = random_image(&mut rng, r, c);
            let em = energy_map(&img);
            let seam = min_seam(&em);
            let recomputed: u64 = seam
                .cols_by_row
                .iter()
                .enumerate()
                .map(|(row, &col)| u64::from(em.get(row, col)))
                .sum();
            assert_eq!(recomputed, seam.total_energy);
            for _ in 0..1000 {
                let path = random_path(&mut rng, r, c);
                let e: u64 = path
                    .iter()
                    .enumerate()
                    .map(|(row, &col)| u64::from(em.get(row, col)))
                    .sum();
                assert!(seam.total_energy <= e);
            }
        }
    }

    proptest! {
        #[test]
        fn carve_shape_and_connectivity(
            (img, k) in crate::image::tests::arb_image(16)
                .prop_flat_map(|img| { let c = img.cols(); (Just(img), 0..c) })
        ) {
            let mut seams = Vec::new();
            let out = carve_with(&img, k, |_, s| seams.push(s.clone())).unwrap();
            prop_assert_eq!(out.rows(), img.rows());
            prop_assert_eq!(out.cols(), img.cols() - k);
            prop_assert_eq!(seams.len(), k);
            for (i, s) in seams.iter().enumerate() {
                prop_assert!(s.validate(img.rows(), img.cols() - i).is_ok());
            }
            prop_assert_eq!(carve(&img, k).unwrap(), out);
        }

        #[test]
        fn remove_seam_preserves_other_pixels(
            img in crate::image::tests::arb_image(12).prop_filter("wide", |i| i.cols() >= 2),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols_by_row = random_path(&mut rng, img.rows(), img.cols());
            let mut expected: Vec<u8> = img.pixels().to_vec();
            let mut removed: Vec<u8> = cols_by_row
                .iter()
                .enumerate()
                .map(|(r, &c)| img.get(r, c))
                .collect();
            let out = remove_seam(&img, &Seam { cols_by_row, total_energy: 0 }).unwrap();
            // multiset difference: sorted input minus sorted removed == sorted output
            expected.sort_unstable();
            removed.sort_unstable();
            for v in removed {
                let pos = expected.binary_search(&v).unwrap();
                expected.remove(pos);
            }
            let mut got = out.pixels().to_vec();
            got.sort_unstable();
            prop_assert_eq!(got, expected);
        }
    }
}
