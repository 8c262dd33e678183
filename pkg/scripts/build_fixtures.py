"""Regenerate the shipped fixture store under src/finmcp/data/fixtures.

All companies are synthetic. Figures are built with Decimal arithmetic so
that segment sums equal revenue, the cash roll-forward ties to the balance
sheet, and assets equal liabilities plus equity in every period.
"""

from __future__ import annotations

import json
import shutil
from decimal import Decimal as D
from pathlib import Path

SCHEMA = "finmcp-fixture/1"
ROOT = Path(__file__).resolve().parents[1] / "src" / "finmcp" / "data" / "fixtures"
TENTH = D("0.1")


def q(x: D) -> D:
    return x.quantize(TENTH)


def dump(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)

    def conv(o):
        if isinstance(o, D):
            return _Raw(format(o, "f"))
        if isinstance(o, dict):
            return {k: conv(v) for k, v in o.items()}
        if isinstance(o, list):
            return [conv(v) for v in o]
        return o

    text = json.dumps(conv(doc), indent=2, ensure_ascii=False, cls=_RawEncoder)
    path.write_text(_RawEncoder.unwrap(text) + "\n", encoding="utf-8")


class _Raw(str):
    pass


class _RawEncoder(json.JSONEncoder):
    """Writes ``_Raw`` strings as bare numerals so decimals stay exact."""

    MARK = "@@RAW@@"

    def iterencode(self, o, _one_shot=False):
        def walk(x):
            if isinstance(x, _Raw):
                return f"{self.MARK}{x}{self.MARK}"
            if isinstance(x, dict):
                return {k: walk(v) for k, v in x.items()}
            if isinstance(x, list):
                return [walk(v) for v in x]
            return x

        return super().iterencode(walk(o), _one_shot)

    @classmethod
    def unwrap(cls, text: str) -> str:
        return text.replace(f'"{cls.MARK}', "").replace(f'{cls.MARK}"', "")


def period_doc(company: str, kind: str, period: str, rows: list[tuple], currency: str = "USD",
               scale: str = "millions") -> dict:
    out_rows = []
    for r in rows:
        label, value = r[0], r[1]
        unit = r[2] if len(r) > 2 else "currency"
        out_rows.append({"label": label, "unit": unit, "value": value})
    return {"schema": SCHEMA, "company": company, "kind": kind, "period": period,
            "currency": currency, "scale": scale, "rows": out_rows}


def company_doc(cid: str, name: str, aliases: list[str], currency: str = "USD") -> dict:
    return {"schema": SCHEMA, "id": cid, "name": name, "aliases": aliases, "currency": currency}


YEARS = [2019, 2020, 2021, 2022, 2023]


def fixturecorp() -> None:
    cid = "FixtureCorp"
    base = ROOT / cid
    dump(base / "company.json", company_doc(cid, "FixtureCorp", ["Fixture Corporation", "FXC"]))
    revenue = {2019: D("3810.4"), 2020: D("3522.9"), 2021: D("4207.6"), 2022: D("4650.8"), 2023: D("5003.2")}
    cash_begin = D("612.5")
    for y in YEARS:
        p = f"FY{y}"
        rev = revenue[y]
        cogs = q(rev * D("0.58"))
        gross = rev - cogs
        sga = q(rev * D("0.27"))
        da = q(rev * D("0.035"))
        op = gross - sga - da
        interest = D("41.3") + D(y - 2019) * D("2.2")
        pretax = op - interest
        tax = q(pretax * D("0.23"))
        net = pretax - tax
        dump(base / "income" / f"{p}.json", period_doc(cid, "Income", p, [
            ("Revenue", rev), ("Cost of revenue", cogs), ("Gross profit", gross),
            ("Selling, general and administrative", sga), ("Depreciation and amortization", da),
            ("Operating income", op), ("Interest expense", interest), ("Income before taxes", pretax),
            ("Income tax expense", tax), ("Net income", net),
            ("Diluted EPS", (net / D("412.0")).quantize(D("0.01")), "per_share"),
        ]))
        # segments: shares chosen so totals are exact
        retail = q(rev * D("0.62"))
        wholesale = q(rev * D("0.29"))
        services = rev - retail - wholesale
        dump(base / "business_segments" / f"{p}.json", period_doc(cid, "BusinessSegments", p, [
            ("Retail", retail), ("Wholesale", wholesale), ("Services", services), ("Total revenue", rev)]))
        americas = q(rev * D("0.55"))
        emea = q(rev * D("0.28"))
        apac = rev - americas - emea
        dump(base / "geographic_segments" / f"{p}.json", period_doc(cid, "GeographicSegments", p, [
            ("Americas", americas), ("EMEA", emea), ("Asia Pacific", apac), ("Total revenue", rev)]))
        apparel = q(rev * D("0.47"))
        footwear = q(rev * D("0.33"))
        accessories = rev - apparel - footwear
        dump(base / "product_segments" / f"{p}.json", period_doc(cid, "ProductSegments", p, [
            ("Apparel", apparel), ("Footwear", footwear), ("Accessories", accessories), ("Total revenue", rev)]))
        # cash flow and balance sheet tie through ending cash
        cfo = net + da + q(rev * D("0.012"))
        capex = -q(rev * D("0.045"))
        acq = D("-250.0") if y == 2023 else (D("-85.0") if y == 2021 else D("0.0"))
        cfi = capex + acq
        dividends = -q(net * D("0.30"))
        debt_change = D("120.0") if y == 2023 else D("-40.0")
        cff = dividends + debt_change
        change = cfo + cfi + cff
        cash_end = cash_begin + change
        dump(base / "cash_flow" / f"{p}.json", period_doc(cid, "CashFlow", p, [
            ("Net income", net), ("Depreciation and amortization", da),
            ("Changes in working capital", q(rev * D("0.012"))),
            ("Net cash from operating activities", cfo), ("Capital expenditures", capex),
            ("Acquisitions, net of cash acquired", acq), ("Net cash from investing activities", cfi),
            ("Dividends paid", dividends), ("Net change in borrowings", debt_change),
            ("Net cash from financing activities", cff), ("Net change in cash", change),
            ("Cash at beginning of period", cash_begin), ("Cash at end of period", cash_end),
        ]))
        receivables = q(rev * D("0.09"))
        inventory = q(rev * D("0.16"))
        ppe = q(rev * D("0.41"))
        goodwill = D("310.0") + (D("60.0") if y >= 2021 else 0) + (D("180.0") if y >= 2023 else 0)
        total_assets = cash_end + receivables + inventory + ppe + goodwill
        payables = q(rev * D("0.11"))
        debt = D("900.0") + D(y - 2019) * D("-40.0") + (D("160.0") if y == 2023 else 0)
        other_liab = q(rev * D("0.05"))
        total_liab = payables + debt + other_liab
        equity = total_assets - total_liab
        dump(base / "balance_sheet" / f"{p}.json", period_doc(cid, "BalanceSheet", p, [
            ("Cash and cash equivalents", cash_end), ("Accounts receivable", receivables),
            ("Inventories", inventory), ("Property, plant and equipment, net", ppe),
            ("Goodwill", goodwill), ("Total assets", total_assets),
            ("Accounts payable", payables), ("Long-term debt", debt),
            ("Other liabilities", other_liab), ("Total liabilities", total_liab),
            ("Total shareholders' equity", equity),
            ("Total liabilities and equity", total_liab + equity),
        ]))
        dump(base / "capital_structure" / f"{p}.json", period_doc(cid, "CapitalStructure", p, [
            ("Total debt", debt), ("Total equity", equity), ("Total capital", debt + equity),
            ("Debt to capital", q(debt / (debt + equity) * 100), "%"),
            ("Shares outstanding", D(412000000 - (y - 2019) * 1500000), "shares"),
        ]))
        stores = 820 + (y - 2019) * 35
        dump(base / "operating_metrics" / f"{p}.json", period_doc(cid, "OperatingMetrics", p, [
            ("Number of stores", D(stores), "stores"),
            ("Employees", D(21400 + (y - 2019) * 900), "employees"),
            ("Selling square footage", D(stores * 11250), "sq ft"),
            ("Same-store sales growth", D("-7.6") if y == 2020 else D("3.1") + D(y - 2021) * D("0.4"), "%"),
            ("Revenue per store", (rev / stores).quantize(D("0.001")), "currency"),
        ]))
        pbo = D("540.0") + D(y - 2019) * D("12.5")
        assets = D("470.0") + D(y - 2019) * D("15.0")
        dump(base / "pension_plan" / f"{p}.json", period_doc(cid, "PensionPlan", p, [
            ("Projected benefit obligation", pbo), ("Fair value of plan assets", assets),
            ("Funded status", assets - pbo), ("Discount rate", D("4.1") + D(y - 2019) * D("0.2"), "%"),
            ("Employer contributions", D("18.0")),
        ]))
        cash_begin = cash_end
    # quarterly income for FY2023; quarters sum to the annual figure
    rev = revenue[2023]
    shares = [D("0.23"), D("0.24"), D("0.25")]
    qrev = [q(rev * s) for s in shares]
    qrev.append(rev - sum(qrev))
    for i, r in enumerate(qrev, start=1):
        p = f"FY2023Q{i}"
        cogs = q(r * D("0.58"))
        dump(base / "income" / f"{p}.json", period_doc(cid, "Income", p, [
            ("Revenue", r), ("Cost of revenue", cogs), ("Gross profit", r - cogs)]))
    dump(base / "acquisitions" / "deals.json", {
        "schema": SCHEMA, "company": cid, "kind": "Acquisitions", "currency": "USD", "scale": "millions",
        "deals": [
            {"id": "D-2021-01", "target": "Trailhead Goods LLC", "announce_date": "2021-03-08",
             "value": D("85.0"), "status": "Completed"},
            {"id": "D-2023-01", "target": "Acme Outfitters Inc", "announce_date": "2023-06-15",
             "value": D("250.0"), "status": "Completed"},
        ]})
    dump(base / "transcript" / "FY2023Q4.json", {
        "schema": SCHEMA, "company": cid, "kind": "Transcript", "period": "FY2023Q4",
        "turns": [
            {"speaker": "Operator", "role": "operator",
             "text": "Good afternoon and welcome to the FixtureCorp fourth quarter fiscal 2023 earnings call."},
            {"speaker": "Dana Whitfield", "role": "CEO",
             "text": "Thank you. Full-year revenue reached $5.0 billion, up 7.6% on the prior year. "
                     "We opened 35 net new stores and closed the Acme Outfitters acquisition in June."},
            {"speaker": "Ravi Menon", "role": "CFO",
             "text": "Fourth quarter revenue was $1,400.9 million. For fiscal 2024 we expect revenue growth "
                     "in the mid single digits, and our guidance assumes capital expenditures near 4.5% of sales."},
            {"speaker": "Operator", "role": "operator",
             "text": "Our first question comes from Lena Ortiz with Harbor Securities."},
            {"speaker": "Lena Ortiz", "role": "analyst",
             "text": "Thanks. Could you talk about wholesale margins and whether the pension contribution will rise?"},
            {"speaker": "Ravi Menon", "role": "CFO",
             "text": "Wholesale margins held steady. Employer pension contributions should stay near $18 million."},
        ]})
    dump(base / "transcript" / "FY2023Q3.json", {
        "schema": SCHEMA, "company": cid, "kind": "Transcript", "period": "FY2023Q3",
        "turns": [
            {"speaker": "Operator", "role": "operator", "text": "Welcome to the FixtureCorp third quarter call."},
            {"speaker": "Dana Whitfield", "role": "CEO", "text": "Third quarter revenue was $1,250.8 million."},
        ]})


def northwind() -> None:
    cid = "NorthwindMetals"
    base = ROOT / cid
    dump(base / "company.json", company_doc(cid, "Northwind Metals plc", ["Northwind", "NWM"], "GBP"))
    for y, rev in ((2022, D("1204.75")), (2023, D("1318.05"))):
        p = f"FY{y}"
        cogs = q(rev * D("0.71"))
        dump(base / "income" / f"{p}.json", period_doc(cid, "Income", p, [
            ("Revenue", rev), ("Cost of sales", cogs), ("Gross profit", rev - cogs),
            ("Profit for the year", q((rev - cogs) * D("0.35")))], currency="GBP", scale="thousands"))
        mills = q(rev * D("0.6"))
        dump(base / "business_segments" / f"{p}.json", period_doc(cid, "BusinessSegments", p, [
            ("Rolled products", mills), ("Recycling", rev - mills), ("Total revenue", rev)],
            currency="GBP", scale="thousands"))
        dump(base / "operating_metrics" / f"{p}.json", period_doc(cid, "OperatingMetrics", p, [
            ("Tonnes shipped", D(401000 + (y - 2022) * 23000), "tonnes"),
            ("Plants", D(6), "plants")], currency="GBP", scale="thousands"))
    dump(base / "acquisitions" / "deals.json", {
        "schema": SCHEMA, "company": cid, "kind": "Acquisitions", "currency": "GBP", "scale": "thousands",
        "deals": []})


def quietlabs() -> None:
    cid = "QuietLabs"
    base = ROOT / cid
    dump(base / "company.json", company_doc(cid, "Quiet Labs Inc", ["QLAB"]))
    rev = D("88.4")
    dump(base / "income" / "FY2023.json", period_doc(cid, "Income", "FY2023", [
        ("Revenue", rev), ("Research and development", D("61.2")), ("Net loss", D("-37.9"))]))
    dump(base / "balance_sheet" / "FY2023.json", period_doc(cid, "BalanceSheet", "FY2023", [
        ("Cash and cash equivalents", D("142.0")), ("Total assets", D("171.6")),
        ("Total liabilities", D("40.3")), ("Total shareholders' equity", D("131.3"))]))


def main() -> None:
    if ROOT.exists():
        shutil.rmtree(ROOT)
    fixturecorp()
    northwind()
    quietlabs()
    print(f"wrote fixtures to {ROOT}")


if __name__ == "__main__":
    main()
