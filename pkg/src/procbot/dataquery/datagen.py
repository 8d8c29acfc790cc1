"""Deterministic synthetic datasets for the loan and travel processes.

Same (seed, size) always yields byte-identical tables, documents, and names,
which is what lets the query corpus pin exact numeric answers.
"""

from __future__ import annotations

import datetime
import json
import os
import random
from dataclasses import dataclass
from typing import Dict, List

from .tables import ColumnType, Table, save_csv

BORROWER_POOL = (
    "John Smith", "V. Doe", "Y. Doe", "Maria Garcia", "Wei Chen", "Aisha Khan",
    "Carlos Rivera", "Emma Wilson", "Noah Brown", "Olivia Davis", "Liam Miller",
    "Sofia Rossi", "Ethan Clark", "Ava Lewis", "Mia Walker", "Lucas Hall",
    "Amelia Young", "Mason King", "Isabella Scott", "Leo Turner",
)

EMPLOYEE_POOL = (
    "John Smith", "Maria Garcia", "Wei Chen", "Emma Wilson", "Noah Brown",
    "Olivia Davis", "Sofia Rossi", "Ethan Clark",
)

DESTINATIONS = ("headquarters", "New York", "Boston", "Austin", "London",
                "Berlin", "Singapore")
EVENTS = ("training", "conference", "client meeting", "seminar", "workshop")
LOAN_STATUSES = ("submitted", "review", "approved", "rejected")
TRAVEL_STATES = ("PendingManager", "PendingDirector", "Approved", "Rejected")

CREDIT_SCORE_RANGE = (300, 850)

LOAN_COLUMNS = (
    ("borrower", ColumnType.STRING),
    ("amount", ColumnType.NUMBER),
    ("yearly_income", ColumnType.NUMBER),
    ("credit_score", ColumnType.NUMBER),
    ("submitted_date", ColumnType.DATE),
    ("status", ColumnType.STRING),
)

TRAVEL_COLUMNS = (
    ("employee", ColumnType.STRING),
    ("destination", ColumnType.STRING),
    ("event", ColumnType.STRING),
    ("estimated_cost", ColumnType.NUMBER),
    ("state", ColumnType.STRING),
)

SAMPLE_DOCUMENTS: Dict[str, str] = {
    "loan_smith.txt": (
        "Applicant: John Smith\n"
        "Amount: 600000\n"
        "Credit Score: 550\n"
        "Yearly Income: 40000\n"
    ),
    "loan_doe.txt": (
        "Applicant: V. Doe\n"
        "Loan Amount: 150000\n"
        "FICO: 720\n"
        "Annual Salary: 85000\n"
    ),
}


@dataclass(frozen=True)
class DataBundle:
    loans: Table
    travel: Table
    documents: Dict[str, str]
    persons: List[str]


def generate_dataset(seed: int, size: int) -> DataBundle:
    rng = random.Random(seed)
    base_date = datetime.date(2023, 1, 1)

    loan_rows = []
    for _ in range(size):
        borrower = rng.choice(BORROWER_POOL)
        amount = rng.randrange(5_000, 950_000, 500)
        income = rng.randrange(20_000, 250_000, 500)
        score = rng.randint(*CREDIT_SCORE_RANGE)
        day = base_date + datetime.timedelta(days=rng.randint(0, 729))
        status = rng.choice(LOAN_STATUSES)
        loan_rows.append((borrower, amount, income, score, day.isoformat(), status))

    travel_rows = []
    for _ in range(max(size // 5, 0)):
        employee = rng.choice(EMPLOYEE_POOL)
        destination = rng.choice(DESTINATIONS)
        event = rng.choice(EVENTS)
        cost = rng.randrange(200, 5_000, 50)
        state = rng.choice(TRAVEL_STATES)
        travel_rows.append((employee, destination, event, cost, state))

    persons = sorted(set(BORROWER_POOL) | set(EMPLOYEE_POOL))
    return DataBundle(
        loans=Table("loans", LOAN_COLUMNS, tuple(loan_rows)),
        travel=Table("travel", TRAVEL_COLUMNS, tuple(travel_rows)),
        documents=dict(SAMPLE_DOCUMENTS),
        persons=persons,
    )


def write_dataset(bundle: DataBundle, out_dir: str) -> List[str]:
    """Write CSVs and documents under out_dir; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    docs_dir = os.path.join(out_dir, "documents")
    os.makedirs(docs_dir, exist_ok=True)
    written = []
    loans_path = os.path.join(out_dir, "loans.csv")
    travel_path = os.path.join(out_dir, "travel.csv")
    save_csv(bundle.loans, loans_path)
    save_csv(bundle.travel, travel_path)
    written.extend([loans_path, travel_path])
    for name, text in sorted(bundle.documents.items()):
        path = os.path.join(docs_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        written.append(path)
    persons_path = os.path.join(out_dir, "persons.json")
    with open(persons_path, "w", encoding="utf-8") as fh:
        json.dump(bundle.persons, fh, indent=2)
        fh.write("\n")
    written.append(persons_path)
    return written
