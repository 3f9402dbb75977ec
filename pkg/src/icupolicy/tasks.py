"""Fixed task order shared by labels, predictions and reports.

Mortality first, then the interventions in the order of the label definitions.
"""

TASKS = (
    'mortality',
    'vasopressors',
    'inotropes',
    'sedation',
    'analgesic',
    'anticoagulation',
    'diuretic',
    'paralytic',
    'colloid_bolus',
    'crystalloid_bolus',
    'ffp_transfusion',
    'rbc_transfusion',
    'ventilation',
    'antibiotic',
)

INTERVENTIONS = TASKS[1:]

NUM_TASKS = len(TASKS)

# training split prevalences of the source cohort
DEFAULT_PREVALENCE = {
    'mortality': 0.089,
    'vasopressors': 0.167,
    'inotropes': 0.045,
    'sedation': 0.243,
    'analgesic': 0.268,
    'anticoagulation': 0.298,
    'diuretic': 0.186,
    'paralytic': 0.009,
    'colloid_bolus': 0.062,
    'crystalloid_bolus': 0.396,
    'ffp_transfusion': 0.053,
    'rbc_transfusion': 0.309,
    'ventilation': 0.130,
    'antibiotic': 0.866,
}

LABELS = {
    'mortality': 'In-ICU Mortality',
    'vasopressors': 'Vasopressors',
    'inotropes': 'Inotropes',
    'sedation': 'Sedation',
    'analgesic': 'Analgesic',
    'anticoagulation': 'Anticoagulation',
    'diuretic': 'Diuretic',
    'paralytic': 'Paralytic',
    'colloid_bolus': 'Colloid Bolus',
    'crystalloid_bolus': 'Crystalloid Bolus',
    'ffp_transfusion': 'FFP Transfusion',
    'rbc_transfusion': 'RBC Transfusion',
    'ventilation': 'Ventilation',
    'antibiotic': 'Antibiotic',
}
