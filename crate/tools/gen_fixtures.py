#!/usr/bin/env python3
"""Regenerate the bundled annotation fixtures under crates/core/fixtures.

The fixture text is synthetic: it carries the same fields as the licensed
annotation sources but none of their content. Output is deterministic.
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"
rng = random.Random(271)

PANEL_SOURCE = """
ABL1 ACVR1B AKT1 AKT2 AKT3 ALK ALOX12B AMER1 APC AR ARAF ARFRP1 ARID1A ASXL1 ATM ATR ATRX
AURKA AURKB AXIN1 AXL BAP1 BARD1 BCL2 BCL2L1 BCL2L2 BCL6 BCOR BCORL1 BRAF BRCA1 BRCA2 BRD4
BRIP1 BTG1 BTG2 BTK EMSY CALR CARD11 CASP8 CBFB CBL CCND1 CCND2 CCND3 CCNE1 CD22 CD274 CD70
CD79A CD79B CDC73 CDH1 CDK12 CDK4 CDK6 CDK8 CDKN1A CDKN1B CDKN2A CDKN2B CDKN2C CEBPA CHEK1
CHEK2 CIC CREBBP CRKL CSF1R CSF3R CTCF CTNNA1 CTNNB1 CUL3 CUL4A CXCR4 CYP17A1 DAXX DDR1 DDR2
DIS3 DNMT3A DOT1L EED EGFR EP300 EPHA3 EPHB1 EPHB4 ERBB2 ERBB3 ERBB4 ERCC4 ERG ERRFI1 ESR1
EZH2 TENT5C FANCA FANCC FANCG FANCL FAS FBXW7 FGF19 FGF3 FGF4 FGFR1 FGFR2 FGFR3 FGFR4 FH
FLCN FLT1 FLT3 FOXL2 FUBP1 GATA3 GATA4 GATA6 GNA11 GNA13 GNAQ GNAS GSK3B H3-3A HDAC1 HGF
HNF1A HRAS ID3 IDH1 IDH2 IGF1R IKBKE IKZF1 INPP4B IRF2 IRF4 IRS2 JAK1 JAK2 JAK3 JUN KDM5A
KDM5C KDM6A KDR KEAP1 KIT KMT2A KMT2D KRAS LTK LYN MAF MAP2K1 MAP2K2 MAP2K4 MAP3K1 MAPK1
MCL1 MDM2 MDM4 MED12 MEN1 MET MITF MLH1 MPL MRE11 MSH2 MSH3 MSH6 MST1R MTAP MTOR MUTYH MYC
MYCL MYCN MYD88 NBN NF1 NF2 NFE2L2 NFKBIA NKX2-1 NOTCH1 NOTCH2 NOTCH3 NPM1 NRAS NSD2 NSD3
NTRK1 NTRK2 NTRK3 PALB2 PRKN PARP1 PAX5 PBRM1 PDCD1 PDCD1LG2 PDGFRA PDGFRB PIK3CA PIK3CB
PIK3R1 PIM1 PMS2 POLD1 POLE PPARG PPP2R1A PRDM1 PTCH1 PTEN PTPN11 RAC1 RAD21 RAD51 RAD51C
RAD51D RAF1 RARA RB1 RBM10 REL RET RICTOR RNF43 ROS1 RPTOR SDHA SDHB SETD2 SF3B1 SMAD2 SMAD4
SMARCA4 SMARCB1 SMO SOX2 SPOP SRC STAG2 STAT3 STK11 SUFU TET2 TGFBR2 TP53 TSC1 TSC2 U2AF1
VEGFA VHL WT1 XPO1 ZNF217 FGF10 FGF23 KEL KLHL6 MERTK MKNK1 PARP2 PRKAR1A
""".split()

KNOWN_FUNCTIONS = {
    "TP53": "This gene encodes a tumor suppressor protein containing transcriptional activation, DNA binding, and oligomerization domains. The encoded protein responds to diverse cellular stresses by regulating target genes that induce cell cycle arrest, apoptosis, senescence, and DNA repair.",
    "KRAS": "This gene, a Kirsten ras oncogene homolog from the mammalian ras gene family, encodes a small GTPase that relays growth factor receptor signals to the MAPK and PI3K cascades. Activating substitutions lock the protein in its GTP-bound state and drive proliferation.",
    "MDM2": "This gene encodes a nuclear E3 ubiquitin ligase that binds the p53 transactivation domain and promotes its proteasomal degradation. Amplification of this locus blunts p53 dependent growth arrest and apoptosis.",
    "EGFR": "This gene encodes a transmembrane glycoprotein of the receptor tyrosine kinase superfamily that binds epidermal growth factor ligands. Kinase domain mutations confer ligand independent activation and sensitivity to tyrosine kinase inhibitors.",
    "ALK": "This gene encodes a receptor tyrosine kinase of the insulin receptor superfamily. Chromosomal rearrangements produce constitutively active fusion kinases that promote survival signaling.",
    "STK11": "This gene encodes a serine threonine kinase that activates AMP activated protein kinase family members and regulates cell polarity and energy metabolism. Loss of function is associated with an immunologically cold tumor microenvironment.",
    "KEAP1": "This gene encodes a substrate adaptor of a cullin based E3 ligase that targets the transcription factor NRF2 for degradation. Inactivation increases antioxidant response signaling and chemoresistance.",
    "CDK4": "This gene encodes a serine threonine kinase that partners with D type cyclins to phosphorylate the retinoblastoma protein and drive the G1 to S phase transition.",
    "REL": "This gene encodes a member of the Rel NF-kB transcription factor family that regulates inflammatory, immune, and anti-apoptotic gene programs.",
    "RICTOR": "This gene encodes a scaffold subunit of the mTORC2 complex that phosphorylates AKT and regulates cytoskeletal organization and cell survival.",
    "ATR": "This gene encodes a phosphatidylinositol 3 kinase related kinase that senses replication stress and single stranded DNA and activates checkpoint signaling through CHEK1.",
    "BRAF": "This gene encodes a serine threonine protein kinase of the RAF family that transmits mitogenic signals from RAS to MEK and ERK.",
    "MET": "This gene encodes the hepatocyte growth factor receptor tyrosine kinase. Exon 14 skipping alterations and amplification lead to sustained receptor signaling.",
    "PIK3CA": "This gene encodes the catalytic subunit of class I phosphatidylinositol 3 kinase that generates PIP3 and activates AKT dependent growth signaling.",
    "ERBB2": "This gene encodes a member of the epidermal growth factor receptor family that lacks a ligand binding domain and heterodimerizes to amplify downstream signaling.",
    "RB1": "This gene encodes the retinoblastoma protein, a negative regulator of the cell cycle that represses E2F transcription factors.",
    "CDKN2A": "This gene encodes the p16INK4a and p14ARF proteins that restrain CDK4 and MDM2 activity, respectively, and enforce senescence.",
    "PTEN": "This gene encodes a lipid phosphatase that dephosphorylates PIP3 and antagonizes PI3K AKT signaling.",
    "SMARCA4": "This gene encodes the ATPase subunit BRG1 of the SWI SNF chromatin remodeling complex that controls access of transcription factors to chromatin.",
    "NF1": "This gene encodes neurofibromin, a GTPase activating protein that accelerates hydrolysis of RAS bound GTP.",
}

FAMILIES = [
    "receptor tyrosine kinase", "cytoplasmic serine threonine kinase", "transcription factor",
    "chromatin regulator", "DNA repair enzyme", "E3 ubiquitin ligase adaptor", "small GTPase regulator",
    "cell cycle regulator", "scaffold protein", "phosphatase", "growth factor ligand",
    "RNA splicing factor", "cohesin complex subunit", "metabolic enzyme", "apoptosis regulator",
]
PROCESSES = [
    "cell proliferation", "apoptotic signaling", "DNA double strand break repair", "mismatch repair",
    "histone methylation", "chromatin remodeling", "angiogenesis", "immune cell activation",
    "cell adhesion", "protein ubiquitination", "mRNA splicing", "glucose metabolism",
    "hematopoietic differentiation", "Wnt signaling", "Hedgehog signaling", "Notch signaling",
    "TGF-beta signaling", "JAK-STAT signaling", "oxidative stress response", "sister chromatid cohesion",
    "replication fork protection", "hypoxia response", "lipid kinase signaling", "nuclear export",
]
TUMORS = [
    "non-small cell lung carcinoma", "colorectal adenocarcinoma", "breast carcinoma", "melanoma",
    "acute myeloid leukemia", "glioblastoma", "ovarian carcinoma", "urothelial carcinoma",
    "hepatocellular carcinoma", "pancreatic adenocarcinoma", "renal cell carcinoma", "lymphoma",
]
EFFECTS = [
    "downstream kinase activation", "loss of checkpoint control", "altered transcriptional programs",
    "impaired genome maintenance", "resistance to targeted therapy", "enhanced survival signaling",
    "metabolic rewiring", "immune evasion", "lineage plasticity", "defective differentiation",
]
KEGG = [
    "MAPK signaling pathway", "Ras signaling pathway", "PI3K-Akt signaling pathway", "Cell cycle",
    "p53 signaling pathway", "Apoptosis", "mTOR signaling pathway", "ErbB signaling pathway",
    "Non-small cell lung cancer", "Pathways in cancer", "JAK-STAT signaling pathway",
    "Wnt signaling pathway", "Notch signaling pathway", "Hedgehog signaling pathway",
    "TGF-beta signaling pathway", "NF-kappa B signaling pathway", "Homologous recombination",
    "Mismatch repair", "Fanconi anemia pathway", "VEGF signaling pathway", "HIF-1 signaling pathway",
    "Focal adhesion", "Cellular senescence", "FoxO signaling pathway", "AMPK signaling pathway",
    "Central carbon metabolism in cancer", "Transcriptional misregulation in cancer",
    "PD-L1 expression and PD-1 checkpoint pathway in cancer", "EGFR tyrosine kinase inhibitor resistance",
    "Platinum drug resistance", "Ubiquitin mediated proteolysis", "Spliceosome",
]
GO_BP = [
    "negative regulation of transcription by RNA polymerase II", "positive regulation of cell population proliferation",
    "intrinsic apoptotic signaling pathway", "DNA damage response", "double-strand break repair via homologous recombination",
    "regulation of cell cycle G1/S phase transition", "protein phosphorylation", "peptidyl-tyrosine phosphorylation",
    "signal transduction", "chromatin remodeling", "histone H3-K27 methylation", "angiogenesis",
    "T cell activation", "cell migration", "response to oxidative stress", "mRNA splicing, via spliceosome",
    "regulation of autophagy", "epithelial to mesenchymal transition", "negative regulation of apoptotic process",
    "cellular response to hypoxia", "protein ubiquitination", "mitotic sister chromatid segregation",
    "Ras protein signal transduction", "regulation of TOR signaling",
]
GO_MF = [
    "transcription cis-regulatory region binding", "protein kinase activity", "protein tyrosine kinase activity",
    "ATP binding", "GTPase activity", "GTP binding", "DNA binding", "chromatin binding",
    "ubiquitin protein ligase activity", "phosphatidylinositol 3-kinase activity", "protein serine/threonine kinase activity",
    "histone methyltransferase activity", "zinc ion binding", "identical protein binding",
    "transmembrane receptor protein tyrosine kinase activity", "enzyme binding", "RNA binding",
    "metal ion binding", "growth factor activity", "phosphatase activity",
]

ALIASES = [
    ("P53", "TP53"), ("P53-LIKE-ALIAS", "TP53"), ("TRP53", "TP53"), ("KRAS2", "KRAS"), ("KI-RAS", "KRAS"),
    ("HDM2", "MDM2"), ("LKB1", "STK11"), ("HER2", "ERBB2"), ("NEU", "ERBB2"), ("ERBB1", "EGFR"),
    ("HER1", "EGFR"), ("C-MET", "MET"), ("HGFR", "MET"), ("NRF2", "NFE2L2"), ("P16", "CDKN2A"),
    ("CDKN2", "CDKN2A"), ("BRG1", "SMARCA4"), ("INI1", "SMARCB1"), ("MLL", "KMT2A"), ("MLL2", "KMT2D"),
    ("PD-L1", "CD274"), ("PD1", "PDCD1"), ("C11ORF30", "EMSY"), ("FAM46C", "TENT5C"), ("H3F3A", "H3-3A"),
    ("MRE11A", "MRE11"), ("PARK2", "PRKN"), ("WHSC1", "NSD2"), ("WHSC1L1", "NSD3"), ("TTF1", "NKX2-1"),
    ("C-MYC", "MYC"), ("RICTOR1", "RICTOR"), ("FRAP1", "MTOR"), ("CDK4P", "CDK4"),
]

CLASSES = [
    # anti-cancer
    ("platinum_chemo", "Platinum-Based Chemotherapy", "anti_cancer", ["cisplatin", "carboplatin"]),
    ("taxane", "Taxanes", "anti_cancer", ["paclitaxel", "docetaxel"]),
    ("antifolate", "Antifolates", "anti_cancer", ["pemetrexed"]),
    ("nucleoside_analog", "Nucleoside Analogs", "anti_cancer", ["gemcitabine"]),
    ("vinca_alkaloid", "Vinca Alkaloids", "anti_cancer", ["vinorelbine"]),
    ("topoisomerase_inhibitor", "Topoisomerase Inhibitors", "anti_cancer", ["etoposide", "irinotecan", "topotecan"]),
    ("pd1_pdl1_inhibitor", "PD-1/PD-L1 Checkpoint Inhibitors", "anti_cancer",
     ["pembrolizumab", "nivolumab", "atezolizumab", "durvalumab", "cemiplimab"]),
    ("ctla4_inhibitor", "CTLA-4 Checkpoint Inhibitors", "anti_cancer", ["ipilimumab", "tremelimumab"]),
    ("egfr_tki", "EGFR Tyrosine Kinase Inhibitors", "anti_cancer", ["osimertinib", "erlotinib", "gefitinib", "afatinib"]),
    ("alk_ros1_inhibitor", "ALK/ROS1 Inhibitors", "anti_cancer", ["alectinib", "crizotinib", "lorlatinib", "brigatinib"]),
    ("met_inhibitor", "MET Inhibitors", "anti_cancer", ["capmatinib", "tepotinib"]),
    ("ret_inhibitor", "RET Inhibitors", "anti_cancer", ["selpercatinib", "pralsetinib"]),
    ("kras_g12c_inhibitor", "KRAS G12C Inhibitors", "anti_cancer", ["sotorasib", "adagrasib"]),
    ("braf_mek_inhibitor", "BRAF/MEK Inhibitors", "anti_cancer", ["dabrafenib", "trametinib"]),
    ("antiangiogenic", "Anti-Angiogenic Agents", "anti_cancer", ["bevacizumab", "ramucirumab"]),
    ("antibody_drug_conjugate", "Antibody-Drug Conjugates", "anti_cancer", ["trastuzumab-deruxtecan"]),
    ("egfr_antibody", "EGFR-Directed Antibodies", "anti_cancer", ["amivantamab", "necitumumab"]),
    # supportive care
    ("strong_opioid", "Strong Opioids", "supportive", ["morphine", "oxycodone", "hydromorphone", "fentanyl"]),
    ("weak_opioid", "Weak Opioids", "supportive", ["tramadol", "codeine"]),
    ("systemic_corticosteroid", "Systemic Corticosteroids", "supportive", ["dexamethasone", "prednisone", "methylprednisolone"]),
    ("serotonin_antagonist_antiemetic", "5-HT3 Antagonist Antiemetics", "supportive", ["ondansetron", "granisetron", "palonosetron"]),
    ("nk1_antagonist", "NK1 Receptor Antagonists", "supportive", ["aprepitant", "fosaprepitant"]),
    ("dopamine_antagonist_antiemetic", "Dopamine Antagonist Antiemetics", "supportive", ["prochlorperazine", "metoclopramide"]),
    ("myeloid_growth_factor", "Myeloid Growth Factors", "supportive", ["filgrastim", "pegfilgrastim"]),
    ("bone_modifying_agent", "Bone-Modifying Agents", "supportive", ["zoledronic-acid", "denosumab"]),
    ("anticoagulant", "Anticoagulants", "supportive", ["enoxaparin", "apixaban", "rivaroxaban"]),
    ("proton_pump_inhibitor", "Proton Pump Inhibitors", "supportive", ["pantoprazole", "omeprazole", "esomeprazole"]),
]

CLASS_TEXT = {
    "platinum_chemo": ("a platinum coordination complex", "forms intrastrand DNA crosslinks that block replication and transcription", "first line doublet chemotherapy for advanced lung carcinoma", "produces dose dependent cytotoxicity in rapidly dividing cells", "nephrotoxicity, ototoxicity, peripheral neuropathy, and emesis"),
    "taxane": ("a microtubule stabilizing taxane", "binds beta tubulin and prevents microtubule depolymerization, arresting mitosis", "advanced non-small cell lung carcinoma in combination regimens", "induces mitotic arrest and apoptosis", "neutropenia, neuropathy, alopecia, and hypersensitivity reactions"),
    "antifolate": ("a multitargeted antifolate", "inhibits thymidylate synthase and related folate dependent enzymes", "nonsquamous lung carcinoma and maintenance therapy", "depletes nucleotide pools required for DNA synthesis", "myelosuppression, mucositis, and rash"),
    "nucleoside_analog": ("a pyrimidine nucleoside analog", "incorporates into DNA and inhibits ribonucleotide reductase", "squamous and nonsquamous lung carcinoma in doublet regimens", "causes chain termination during DNA synthesis", "myelosuppression, flu like symptoms, and transaminase elevation"),
    "vinca_alkaloid": ("a semisynthetic vinca alkaloid", "binds tubulin and inhibits microtubule assembly", "adjuvant and advanced lung carcinoma", "arrests cells in metaphase", "neutropenia, constipation, and neuropathy"),
    "topoisomerase_inhibitor": ("a topoisomerase inhibitor", "stabilizes the topoisomerase DNA cleavage complex producing strand breaks", "small cell lung carcinoma and salvage regimens", "accumulates DNA breaks during replication", "myelosuppression, diarrhea, and alopecia"),
    "pd1_pdl1_inhibitor": ("a monoclonal antibody immune checkpoint inhibitor", "blocks the PD-1 PD-L1 interaction and restores cytotoxic T cell activity", "advanced lung carcinoma alone or with chemotherapy", "enhances antitumor immune responses", "immune related pneumonitis, colitis, hepatitis, and endocrinopathies"),
    "ctla4_inhibitor": ("a monoclonal antibody against CTLA-4", "blocks CTLA-4 mediated inhibition of T cell priming", "combination immunotherapy for advanced lung carcinoma", "expands activated T cell populations", "immune related colitis, dermatitis, and hypophysitis"),
    "egfr_tki": ("a small molecule EGFR tyrosine kinase inhibitor", "competitively inhibits ATP binding at the EGFR kinase domain", "EGFR mutant non-small cell lung carcinoma", "suppresses EGFR dependent proliferative signaling", "rash, diarrhea, paronychia, and interstitial lung disease"),
    "alk_ros1_inhibitor": ("a small molecule ALK and ROS1 kinase inhibitor", "inhibits fusion kinase autophosphorylation and downstream signaling", "ALK or ROS1 rearranged lung carcinoma", "induces regression of fusion driven tumors", "edema, visual disturbance, hyperlipidemia, and bradycardia"),
    "met_inhibitor": ("a selective MET kinase inhibitor", "blocks MET phosphorylation and HGF driven signaling", "MET exon 14 skipping lung carcinoma", "inhibits MET dependent tumor growth", "peripheral edema, nausea, and creatinine elevation"),
    "ret_inhibitor": ("a selective RET kinase inhibitor", "inhibits wild type and fusion RET kinase activity", "RET fusion positive lung carcinoma", "suppresses RET dependent proliferation", "hypertension, transaminase elevation, and QT prolongation"),
    "kras_g12c_inhibitor": ("a covalent KRAS G12C inhibitor", "locks KRAS G12C in the inactive GDP bound state", "previously treated KRAS G12C mutant lung carcinoma", "reduces MAPK pathway output", "diarrhea, hepatotoxicity, and fatigue"),
    "braf_mek_inhibitor": ("a kinase inhibitor of the BRAF MEK axis", "inhibits mutant BRAF or MEK signaling in the MAPK cascade", "BRAF V600E mutant lung carcinoma", "suppresses ERK phosphorylation", "pyrexia, rash, and left ventricular dysfunction"),
    "antiangiogenic": ("an anti-angiogenic monoclonal antibody", "neutralizes VEGF signaling and inhibits tumor neovascularization", "nonsquamous lung carcinoma with chemotherapy", "reduces vascular permeability and tumor perfusion", "hypertension, bleeding, proteinuria, and wound healing complications"),
    "antibody_drug_conjugate": ("an antibody drug conjugate", "delivers a topoisomerase payload to HER2 expressing cells", "HER2 mutant lung carcinoma", "releases cytotoxic payload after internalization", "interstitial lung disease, nausea, and neutropenia"),
    "egfr_antibody": ("an EGFR directed monoclonal antibody", "binds the EGFR extracellular domain and blocks ligand binding", "EGFR altered lung carcinoma", "inhibits receptor activation and promotes receptor degradation", "infusion reactions, rash, and hypomagnesemia"),
    "strong_opioid": ("a strong opioid analgesic", "acts as a full agonist at the mu opioid receptor", "severe cancer related pain", "produces analgesia and sedation", "respiratory depression, constipation, sedation, and dependence"),
    "weak_opioid": ("a weak opioid analgesic", "acts as a partial mu opioid receptor agonist", "moderate pain", "produces mild analgesia", "nausea, constipation, and dizziness"),
    "systemic_corticosteroid": ("a systemic glucocorticoid", "binds the glucocorticoid receptor and modulates inflammatory gene expression", "cerebral edema, symptom palliation, and antiemetic prophylaxis", "suppresses inflammation and immune responses", "hyperglycemia, myopathy, infection risk, and insomnia"),
    "serotonin_antagonist_antiemetic": ("a serotonin 5-HT3 receptor antagonist", "blocks vagal and central 5-HT3 receptors", "prevention of chemotherapy induced nausea", "reduces acute emesis", "headache, constipation, and QT prolongation"),
    "nk1_antagonist": ("a neurokinin 1 receptor antagonist", "blocks substance P binding at central NK1 receptors", "prevention of delayed chemotherapy induced nausea", "reduces delayed emesis", "fatigue, hiccups, and drug interactions"),
    "dopamine_antagonist_antiemetic": ("a dopamine receptor antagonist antiemetic", "blocks D2 receptors in the chemoreceptor trigger zone", "breakthrough nausea and vomiting", "reduces nausea", "extrapyramidal symptoms and sedation"),
    "myeloid_growth_factor": ("a granulocyte colony stimulating factor", "stimulates proliferation and differentiation of neutrophil precursors", "prevention of febrile neutropenia", "raises absolute neutrophil counts", "bone pain and splenic enlargement"),
    "bone_modifying_agent": ("a bone modifying agent", "inhibits osteoclast mediated bone resorption", "skeletal related events from bone metastases", "reduces bone turnover", "hypocalcemia, osteonecrosis of the jaw, and renal effects"),
    "anticoagulant": ("an anticoagulant", "inhibits coagulation factor Xa activity", "cancer associated venous thromboembolism", "prolongs clotting and prevents thrombus extension", "bleeding and thrombocytopenia"),
    "proton_pump_inhibitor": ("a proton pump inhibitor", "irreversibly inhibits the gastric H K ATPase", "gastroprotection and reflux", "reduces gastric acid secretion", "headache, diarrhea, and hypomagnesemia"),
}


def pick(pool, lo, hi):
    k = rng.randint(lo, hi)
    return rng.sample(pool, k)


def gene_records():
    panel = list(dict.fromkeys(PANEL_SOURCE))
    assert len(panel) == 271, len(panel)
    for sym in panel:
        if sym in KNOWN_FUNCTIONS:
            summary = KNOWN_FUNCTIONS[sym]
        else:
            fam = rng.choice(FAMILIES)
            p1, p2 = rng.sample(PROCESSES, 2)
            tumor = rng.choice(TUMORS)
            eff = rng.choice(EFFECTS)
            summary = (f"This gene encodes a {fam} that participates in {p1} and {p2}. "
                       f"Alterations in {sym} have been reported in {tumor} and may lead to {eff}.")
        kegg = pick(KEGG, 2, 6)
        bp = pick(GO_BP, 1, 4)
        mf = pick(GO_MF, 1, 3)
        if sym == "KRAS":
            kegg = ["Ras signaling pathway", "MAPK signaling pathway", "PI3K-Akt signaling pathway", "Non-small cell lung cancer"]
        if sym == "TP53":
            kegg = ["MAPK signaling pathway", "Cell cycle", "p53 signaling pathway", "PI3K-Akt signaling pathway", "Apoptosis"]
        if sym == "MDM2":
            kegg = ["p53 signaling pathway", "Ubiquitin mediated proteolysis", "Pathways in cancer"]
        yield {
            "hgnc_symbol": sym,
            "function_summary": summary,
            "kegg_pathways": kegg,
            "go_biological_processes": bp,
            "go_molecular_functions": mf,
        }


def drug_records():
    for class_id, display, category, drugs in CLASSES:
        kind, moa, indication, pd, tox = CLASS_TEXT[class_id]
        for d in drugs:
            name = d.replace("-", " ").title()
            yield {
                "drug_id": f"{d}-fixture",
                "name": name,
                "category": category,
                "description": f"{name} is {kind} ({display.lower()}).",
                "mechanism_of_action": f"{name} {moa}.",
                "indication": f"Indicated for {indication}.",
                "pharmacodynamics": f"{name} {pd}.",
                "toxicity": f"Common toxicities include {tox}.",
            }


def write_jsonl(path, header, records):
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_jsonl(OUT / "genes.ann",
                ["gene annotation store: hgnc_symbol, function_summary, kegg_pathways,",
                 "go_biological_processes, go_molecular_functions (synthetic fixture text)"],
                gene_records())
    drugs = list(drug_records())
    assert len(drugs) == 64
    assert sum(d["category"] == "anti_cancer" for d in drugs) == 38
    write_jsonl(OUT / "drugs.ann",
                ["drug annotation store: drug_id, name, category, description, mechanism_of_action,",
                 "indication, pharmacodynamics, toxicity (synthetic fixture text)"],
                drugs)
    write_jsonl(OUT / "aliases.map", ["alias table: alias -> canonical hgnc symbol"],
                ({"alias": a, "symbol": s} for a, s in ALIASES))
    assert len(CLASSES) == 27
    write_jsonl(OUT / "classes.map", ["drug class registry: class_id, display_name, drugs"],
                ({"class_id": c, "display_name": n, "drugs": [f"{d}-fixture" for d in ds]}
                 for c, n, _, ds in CLASSES))


if __name__ == "__main__":
    main()
