import numpy as np
import pytest

from bestat import (
    DomainError,
    ShapeError,
    SymmetryVector,
    cells_of,
    count_cells,
    cross2_set,
    custom_set,
    empirical_copula,
    format_interaction,
    full_symmetry,
    fwht,
    fwht_symmetry,
    interaction_matrix,
    inverse_symmetry,
    joint_cross_set,
    jointcross3_set,
    naive_symmetry,
    parity_sign,
    popcount,
    select,
    spearman_set,
    unif_set,
    walsh_value,
)


def brute_butterfly(x):
    n = x.size
    return np.array([
        sum(((-1) ** int(popcount(a & c))) * x[c] for c in range(n))
        for a in range(n)
    ])


class TestTransform:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for n in (2, 8, 16):
            x = rng.integers(-9, 9, n)
            assert np.array_equal(fwht(x), brute_butterfly(x))

    def test_involution_is_exact_on_integers(self):
        rng = np.random.default_rng(1)
        x = rng.integers(0, 100, 64)
        assert np.array_equal(fwht(fwht(x)), 64 * x)

    def test_axis_handling(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(5, 16))
        rows = np.stack([fwht(r) for r in x])
        assert np.allclose(fwht(x, axis=1), rows)
        assert np.allclose(fwht(x.T, axis=0), rows.T)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ShapeError):
            fwht(np.arange(6))


class TestWalshConventions:
    def test_all_ones_cell_gives_plus_one(self):
        top = (1 << 6) - 1
        masks = np.arange(1 << 6)
        assert np.all(walsh_value(masks, top) == 1)

    def test_empty_mask_gives_plus_one(self):
        assert np.all(walsh_value(0, np.arange(16)) == 1)

    def test_sign_counts_minus_digits_inside_mask(self):
        # cell 0 has every digit negative, so the sign is parity of the mask
        assert walsh_value(0b011, 0) == 1
        assert walsh_value(0b111, 0) == -1

    def test_popcount_rejects_negative(self):
        with pytest.raises(DomainError):
            popcount(-1)


class TestSymmetryRoutes:
    def test_fwht_symmetry_equals_naive_per_sample(self):
        rng = np.random.default_rng(3)
        for p, depth in ((1, 3), (2, 2), (3, 1), (2, 3)):
            u = empirical_copula(rng.normal(size=(40, p)))
            cells = cells_of(u, depth)
            s = fwht_symmetry(count_cells(u, depth))
            for mask in range(1 << (p * depth)):
                assert s[mask] == naive_symmetry(mask, cells)

    def test_inverse_recovers_counts(self):
        rng = np.random.default_rng(4)
        counts = rng.integers(0, 7, 32)
        s = fwht_symmetry(counts)
        assert np.array_equal(inverse_symmetry(s), 32 * counts)

    def test_parity_sign_values(self):
        assert parity_sign(np.array([0, 1, 2, 3])).tolist() == [1, -1, -1, 1]


class TestInteractionSets:
    def test_unif_size_and_range(self):
        s = unif_set(2, 2)
        assert s.size == 15
        assert s.masks[0] == 1 and s.masks[-1] == 15

    def test_cross2_excludes_marginal_masks(self):
        s = cross2_set(3)
        assert s.size == 49
        for m in s.masks:
            assert m & 0b111 and m >> 3

    def test_jointcross3_size(self):
        assert jointcross3_set(3).size == 441
        assert jointcross3_set(3).kind == "jointcross3"

    def test_joint_cross_blocks_nonzero(self):
        s = joint_cross_set(2, 1, 2)
        low = (1 << 4) - 1
        for m in s.masks:
            assert (m & low) != 0 and (m >> 4) != 0
        assert s.size == 15 * 3

    def test_spearman_masks_are_single_digit_pairs(self):
        s = spearman_set(2)
        assert s.size == 4
        for m in s.masks:
            assert popcount(m & 0b11) == 1 and popcount(m >> 2) == 1

    def test_custom_set_sorts_and_dedups(self):
        s = custom_set([3, 1, 3], 1, 2)
        assert s.masks.tolist() == [1, 3]
        with pytest.raises(DomainError):
            custom_set([4], 1, 2)  # out of range for 2 bits


class TestSelectAndScale:
    def test_select_alignment(self):
        rng = np.random.default_rng(5)
        u = empirical_copula(rng.normal(size=(24, 2)))
        full = full_symmetry(count_cells(u, 2), 2, 2)
        sub = select(full, cross2_set(2))
        for mask, value in zip(sub.masks, sub.values):
            assert value == full.values[mask]

    def test_select_missing_mask_raises(self):
        sym = SymmetryVector(np.array([1, 2]), np.array([0.0, 1.0]), "sum", 4, 1, 2)
        with pytest.raises(IndexError):
            select(sym, custom_set([3], 1, 2))

    def test_scale_roundtrip(self):
        rng = np.random.default_rng(6)
        u = empirical_copula(rng.normal(size=(30, 2)))
        full = full_symmetry(count_cells(u, 2), 2, 2)
        back = full.to_mean().to_sum()
        assert np.array_equal(back.values, full.values)
        assert full.to_sum() is full

    def test_full_symmetry_mask_zero_is_n(self):
        rng = np.random.default_rng(7)
        u = empirical_copula(rng.normal(size=(19, 2)))
        full = full_symmetry(count_cells(u, 2), 2, 2)
        assert full.values[0] == 19
        assert full.n == 19


class TestMaskRendering:
    def test_matrix_layout(self):
        # column j holds bits j*depth .. j*depth+depth-1, digit 1 first
        mat = interaction_matrix(0b001_010, 2, 3)
        assert mat.tolist() == [[0, 1, 0], [1, 0, 0]]

    def test_format_lines(self):
        text = format_interaction(0b11, 1, 2)
        assert text == "1 1"
        assert format_interaction(9, 2, 3).splitlines() == ["1 0 0", "1 0 0"]

    def test_out_of_range_mask(self):
        with pytest.raises(DomainError):
            interaction_matrix(16, 1, 2)
