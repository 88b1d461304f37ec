//! Shared unit-test data: a ten-year two-asset annual return history that
//! several modules decompose, plus the tolerance used when comparing against
//! figures quoted to two decimal percent places.

/// Half a unit in the last place of a two-decimal percent figure.
pub(crate) const PCT2: f64 = 5e-5;

/// US large-cap stock annual returns, 2000-2009, as decimals.
pub(crate) const STOCK: [f64; 10] = [
    -0.0910, -0.1189, -0.2210, 0.2868, 0.1088, 0.0491, 0.1579, 0.0549, -0.3700, 0.2646,
];

/// US long-Treasury annual returns, 2000-2009, as decimals.
pub(crate) const TREASURY: [f64; 10] = [
    0.2027, 0.0421, 0.1679, 0.0248, 0.0770, 0.0650, 0.0185, 0.0981, 0.2403, -0.1292,
];

/// Period returns of the 50/50 stock/Treasury mix rebalanced every year.
pub(crate) fn fifty_fifty() -> Vec<f64> {
    STOCK
        .iter()
        .zip(TREASURY.iter())
        .map(|(a, b)| 0.5 * a + 0.5 * b)
        .collect()
}
