"""
One-way analyses of the bundled harmonic table
==============================================

"""

# coefficient of variation of the harmonics, grouped by sub-band
from tablawave import stats as st
g = st.table1_groups("cv", by="subband")
for row in st.descriptives(g):
    print(f"{row.label!s:>5}  n={row.n:2d}  mean={row.mean:8.4f}  sd={row.sd:7.4f}")

# the classic F test, Levene's test and Welch's correction
a = st.oneway_anova(g)
print(f"ANOVA  F({a.df_between}, {a.df_within}) = {a.f_statistic:.3f}  p = {st.format_p(a.p_value)}")
lev = st.levene_test(g)
print(f"Levene {lev.statistic:.3f}  p = {st.format_p(lev.p_value)}")
print(f"Welch  p = {st.format_p(st.welch_anova(g).p_value)}")

# band means differ strongly; Tukey's HSD says which pairs
g = st.table1_groups("mean", by="subband")
for c in st.tukey_hsd(g):
    if c.label_i < c.label_j:
        star = "*" if c.significant_at_05 else " "
        print(f"({c.label_i},{c.label_j}) diff {c.mean_difference:10.4f}  p {st.format_p(c.p_value)} {star}")
