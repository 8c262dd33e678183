"""Independent reference implementations used to cross-check the package.

Deliberately naive: plain loops and hand-written arithmetic, no imports from
the code under test beyond plain data access.
"""

from fractions import Fraction


def combine_closed_form(s1, s2):
    return Fraction(s1 + s2, 4)


def brute_force_means(rows, key):
    """rows: dicts with category, cr, rg, acc, excluded. Returns key -> (n, acc, cr, rg)."""
    out = {}
    keys = []
    for r in rows:
        k = key(r)
        if k not in keys:
            keys.append(k)
    for k in keys:
        members = [r for r in rows if key(r) == k]
        acc_num, acc_den = 0, 0
        cr_num, cr_den = Fraction(0), 0
        rg_num, rg_den = Fraction(0), 0
        for m in members:
            if m["acc"] is not None and not m["excluded"]:
                acc_num += m["acc"]
                acc_den += 1
            if m["cr"] is not None:
                cr_num += Fraction(m["cr"])
                cr_den += 1
            if m["rg"] is not None:
                rg_num += Fraction(m["rg"])
                rg_den += 1
        out[k] = (
            len(members),
            Fraction(acc_num, acc_den) if acc_den else None,
            cr_num / cr_den if cr_den else None,
            rg_num / rg_den if rg_den else None,
        )
    return out


def tier(cr):
    if cr is None:
        return "Unscored"
    return "High" if cr * 4 >= 3 else "Low"


def bucket(category):
    return "Financials" if category == "Financials" else "Other"
