"""Rebuild the bundled benchmark files in ``benchmarks/data/``.

The UCI files were taken from two PyPI distributions that ship them:

* ``Orange==2.7.8`` (sdist): ``Orange/datasets/{breast-cancer,heart_disease,lymphography}.tab``
* ``keel-ds==0.2.5`` (wheel): ``keel_ds/data/balanced/raw/{pima,german}.dat``

Usage::

    python benchmarks/make_datasets.py ORANGE_DATASETS_DIR KEEL_RAW_DIR

Attribute declarations follow the UCI ``.names`` files (and the Weka ARFF
copies derived from them), so declared-but-unobserved nominal values are kept.
"""
import csv
import sys
from pathlib import Path

OUT = Path(__file__).parent / "data"


def read_tab(path):
    lines = [line.rstrip("\n").split("\t") for line in open(path, encoding="utf-8")]
    return lines[0], lines[3:]


def quote(token):
    if token == "?":
        return token
    if any(ch in token for ch in " ,{}'\"%<>") or token == "":
        return "'" + token.replace("'", "\\'") + "'"
    return token


def write_arff(path, relation, attributes, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"@relation {relation}\n\n")
        for name, kind in attributes:
            if kind == "numeric":
                fh.write(f"@attribute {quote(name)} numeric\n")
            else:
                fh.write(f"@attribute {quote(name)} {{{','.join(quote(v) for v in kind)}}}\n")
        fh.write("\n@data\n")
        for row in rows:
            fh.write(",".join(quote(v) for v in row) + "\n")


def breast_cancer(src):
    header, rows = read_tab(src / "breast-cancer.tab")
    domains = {
        "age": ["10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70-79", "80-89", "90-99"],
        "menopause": ["lt40", "ge40", "premeno"],
        "tumor-size": ["0-4", "5-9", "10-14", "15-19", "20-24", "25-29", "30-34", "35-39",
                       "40-44", "45-49", "50-54", "55-59"],
        "inv-nodes": ["0-2", "3-5", "6-8", "9-11", "12-14", "15-17", "18-20", "21-23",
                      "24-26", "27-29", "30-32", "33-35", "36-39"],
        "node-caps": ["yes", "no"],
        "deg-malig": ["1", "2", "3"],
        "breast": ["left", "right"],
        "breast-quad": ["left_up", "left_low", "right_up", "right_low", "central"],
        "irradiat": ["yes", "no"],
        "Class": ["no-recurrence-events", "recurrence-events"],
    }
    # Orange stores the class first; UCI/Weka put it last.
    out = [r[1:] + r[:1] for r in rows]
    write_arff(OUT / "breast-cancer.arff", "breast-cancer", list(domains.items()), out)


def heart_c(src):
    header, rows = read_tab(src / "heart_disease.tab")
    attrs = [
        ("age", "numeric"),
        ("sex", ["female", "male"]),
        ("cp", ["typical ang", "atypical ang", "non-anginal", "asymptomatic"]),
        ("trestbps", "numeric"),
        ("chol", "numeric"),
        ("fbs", ["0", "1"]),
        ("restecg", ["normal", "ST-T abnormal", "left vent hypertrophy"]),
        ("thalach", "numeric"),
        ("exang", ["0", "1"]),
        ("oldpeak", "numeric"),
        ("slope", ["upsloping", "flat", "downsloping"]),
        ("ca", "numeric"),
        ("thal", ["normal", "fixed defect", "reversable defect"]),
        # Cleveland 'num' collapsed to presence/absence, all five labels declared.
        ("num", ["<50", ">50_1", ">50_2", ">50_3", ">50_4"]),
    ]
    out = []
    for r in rows:
        r = list(r)
        r[-1] = "<50" if r[-1] == "0" else ">50_1"
        out.append(r)
    write_arff(OUT / "heart-c.arff", "cleveland-14-heart-disease", attrs, out)


def lymphography(src):
    header, rows = read_tab(src / "lymphography.tab")
    attrs = [
        ("lymphatics", ["normal", "arched", "deformed", "displaced"]),
        ("block_of_affere", ["no", "yes"]),
        ("bl_of_lymph_c", ["no", "yes"]),
        ("bl_of_lymph_s", ["no", "yes"]),
        ("by_pass", ["no", "yes"]),
        ("extravasates", ["no", "yes"]),
        ("regeneration_of", ["no", "yes"]),
        ("early_uptake_in", ["no", "yes"]),
        ("lym_nodes_dimin", "numeric"),
        ("lym_nodes_enlar", "numeric"),
        ("changes_in_lym", ["bean", "oval", "round"]),
        ("defect_in_node", ["no", "lacunar", "lac marginal", "lac central"]),
        ("changes_in_node", ["no", "lacunar", "lac marginal", "lac central"]),
        ("changes_in_stru", ["no", "grainy", "drop-like", "coarse", "diluted", "reticular",
                             "stripped", "faint"]),
        ("special_forms", ["no", "chalices", "vesicles"]),
        ("dislocation_of", ["no", "yes"]),
        ("exclusion_of_no", ["no", "yes"]),
        ("no_of_nodes_in", "numeric"),
        ("class", ["normal", "metastases", "malign lymph", "fibrosis"]),
    ]
    out = [r[1:] + r[:1] for r in rows]
    write_arff(OUT / "lymphography.arff", "lymphography", attrs, out)


def pima(src):
    names = ["preg", "plas", "pres", "skin", "insu", "mass", "pedi", "age", "class"]
    with open(src / "pima.dat", encoding="utf-8") as fh, \
            open(OUT / "pima-diabetes.csv", "w", newline="", encoding="utf-8") as out:
        writer = csv.writer(out)
        writer.writerow(names)
        for row in csv.reader(fh):
            if row:
                writer.writerow([c.strip() for c in row])


def german(src):
    names = ["checking_status", "duration", "credit_history", "purpose", "credit_amount",
             "savings_status", "employment", "installment_commitment", "personal_status",
             "other_parties", "residence_since", "property_magnitude", "age",
             "other_payment_plans", "housing", "existing_credits", "job", "num_dependents",
             "own_telephone", "foreign_worker", "class"]
    labels = {"1": "good", "2": "bad"}
    with open(src / "german.dat", encoding="utf-8") as fh, \
            open(OUT / "german-credit.csv", "w", newline="", encoding="utf-8") as out:
        writer = csv.writer(out)
        writer.writerow(names)
        for row in csv.reader(fh):
            if row:
                row = [c.strip() for c in row]
                row[-1] = labels[row[-1]]
                writer.writerow(row)


def main(argv):
    orange, keel = Path(argv[1]), Path(argv[2])
    OUT.mkdir(exist_ok=True)
    breast_cancer(orange)
    heart_c(orange)
    lymphography(orange)
    pima(keel)
    german(keel)


if __name__ == "__main__":
    main(sys.argv)
