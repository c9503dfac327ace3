#!/usr/bin/env python3
"""
Superfícies Mínimas Completas - linha de comando

Executa as construções em lote (exaustão com h prescrita, φ3 sem zeros,
estágio isolado) e as superfícies de verificação (tripla, labirinto,
distância intrínseca, exportação de malhas e relatórios).

Códigos de saída: 0 quando todos os alvos pedidos passam, 1 quando alguma
verificação falha, 2 para erros de configuração ou de uso.
"""

import os
import sys
import json
import logging
import argparse

# Configurar logging estruturado
import structlog

# Configurar path para imports locais
sys.path.append(os.path.join(os.path.dirname(__file__), 'scripts/superficies_minimas'))

import numpy as np

from configuracao import CONSTRUCAO
from construcao import StageReport, completeness_stage, ponto_base, run_exhaustion, run_nonvanishing, semente
from dominio_plano import generator_cycle, make_annulus, sample_grid
from entrada_saida import (carregar_tripla, escrever, export_mesh, export_reports, exportar_caminho,
                           exportar_distancias, exportar_labirinto, parse_config, serializar_tripla)
from erros import ConfigError, StageFailure, SuperficieMinimaError
from labirinto import DeformParams, build_labyrinth, compute_mu, default_M, lopez_ros_deform, verify_metric_bound
from metricas_completude import caminho_mais_curto, distance_field, distance_to_boundary, metric_graph
from nucleo_weierstrass import (flux, gauss_map, induced_metric, integrate_immersion, isotropy_residual,
                                verificar_periodos)

logging.basicConfig(stream=sys.stderr, format="%(message)s",
                    level=getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO))

# Configurar logging estruturado
structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        structlog.processors.JSONRenderer()
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    cache_logger_on_first_use=True,
)

logger = structlog.get_logger()

SAIDA_OK, SAIDA_FALHA, SAIDA_USO = 0, 1, 2


def _imprimir(resumo: dict):
    """stdout recebe apenas o resumo JSON do subcomando"""
    print(json.dumps(resumo, ensure_ascii=False, indent=2, default=float))


def _carregar_config(caminho: str):
    with open(caminho, encoding="utf-8") as f:
        return parse_config(f.read())


def _carregar_tripla(caminho: str):
    with open(caminho, encoding="utf-8") as f:
        return carregar_tripla(f.read())


def _exportar_resultado(config, resultado):
    saida = config.saida
    texto_csv, texto_jsonl = export_reports(resultado.relatorios)
    if "relatorios_csv" in saida:
        escrever(saida["relatorios_csv"], texto_csv)
    if "relatorios_jsonl" in saida:
        escrever(saida["relatorios_jsonl"], texto_jsonl)
    if "tripla" in saida:
        escrever(saida["tripla"], serializar_tripla(resultado.tripla))
    if "malha" in saida:
        grade = sample_grid(resultado.tripla.carrier, config.grade_radial, config.grade_angular)
        campo = integrate_immersion(resultado.tripla, resultado.campo.basepoint, grade)
        escrever(saida["malha"], export_mesh(campo))


def _exportar_parciais(config, erro: StageFailure):
    if "relatorios_csv" in config.saida:
        escrever(config.saida["relatorios_csv"], export_reports(erro.relatorios)[0])


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def cmd_construct(args) -> int:
    config = _carregar_config(args.config)
    try:
        resultado = run_exhaustion(config.prescricao(), config.torre(), config.estagios,
                                   grau=config.grau, newton_max_iter=config.newton_max_iter)
    except StageFailure as e:
        _exportar_parciais(config, e)
        _imprimir({"status": "falha", "erro": str(e), **e.contexto()})
        return SAIDA_FALHA
    _exportar_resultado(config, resultado)
    aprovado = all(r.aprovado for r in resultado.relatorios) and resultado.lambda2_minimo > 0
    _imprimir({"status": "sucesso" if aprovado else "falha", **resultado.resumo(),
               "relatorios": [r.to_dict() for r in resultado.relatorios]})
    return SAIDA_OK if aprovado else SAIDA_FALHA


def cmd_nonvanishing(args) -> int:
    config = _carregar_config(args.config)
    try:
        resultado = run_nonvanishing(config.fluxo, config.torre(), config.estagios,
                                     eps=config.epsilon, compor=args.compor, grau=config.grau,
                                     newton_max_iter=config.newton_max_iter)
    except StageFailure as e:
        _exportar_parciais(config, e)
        _imprimir({"status": "falha", "erro": str(e), **e.contexto()})
        return SAIDA_FALHA
    _exportar_resultado(config, resultado)
    extras = resultado.extras
    aprovado = (all(r.aprovado for r in resultado.relatorios) and extras["deriva_ok"]
                and extras["nao_constante"] and extras["gauss_sem_zeros_polos"]
                and extras.get("composta_aprovada", True))
    _imprimir({"status": "sucesso" if aprovado else "falha", **resultado.resumo(),
               "relatorios": [r.to_dict() for r in resultado.relatorios]})
    return SAIDA_OK if aprovado else SAIDA_FALHA


def cmd_stage(args) -> int:
    config = _carregar_config(args.config)
    torre = config.torre()
    if len(torre) < 2:
        raise ConfigError("o estágio isolado precisa de ao menos duas regiões", campo="solver.estagios")
    prescricao = config.prescricao()
    X = semente(prescricao, torre[0], newton_max_iter=config.newton_max_iter)
    Y, relatorio = completeness_stage(X, torre[0], torre[1], prescricao, args.epsilon,
                                      basepoint=ponto_base(torre[0]), grau=config.grau,
                                      newton_max_iter=config.newton_max_iter)
    if "relatorios_csv" in config.saida:
        escrever(config.saida["relatorios_csv"], export_reports([relatorio])[0])
    if "tripla" in config.saida:
        escrever(config.saida["tripla"], serializar_tripla(Y))
    aprovado = relatorio.aprovado and relatorio.h_err <= 1e-6 and relatorio.flux_err <= 1e-6
    _imprimir({"status": "sucesso" if aprovado else "falha", **relatorio.to_dict()})
    return SAIDA_OK if aprovado else SAIDA_FALHA


def cmd_verify(args) -> int:
    triple = _carregar_tripla(args.tripla)
    grade = sample_grid(triple.carrier, args.radial, args.angular)
    resumo = {"isotropia": isotropy_residual(triple, grade), "gauss": gauss_map(triple, grade).to_dict()}
    aprovado = resumo["isotropia"] < 1e-10
    verificar_periodos(triple)
    if not triple.carrier.e_disco:
        resumo["fluxo"] = flux(triple, generator_cycle(triple.carrier)).tolist()
    if args.labirinto:
        r, R, N = args.labirinto
        C = make_annulus(r, R)
        spec = build_labyrinth(C, int(N))
        mu = compute_mu(triple.phi3, C, sample_grid(C, 16, 64))
        M = args.M or default_M(int(N))
        radial = int(np.ceil(4 * C.largura * 2 * int(N) ** 3)) + 1
        relatorio = verify_metric_bound(lopez_ros_deform(triple.phi3, M, C), spec,
                                        DeformParams(mu=mu, M=M), sample_grid(C, radial, 64, N=int(N)))
        resumo["cota_metrica"] = relatorio.to_dict()
    _imprimir({"status": "sucesso" if aprovado else "falha", **resumo})
    return SAIDA_OK if aprovado else SAIDA_FALHA


def cmd_labyrinth(args) -> int:
    C = make_annulus(args.r, args.R)
    spec = build_labyrinth(C, args.N)
    radial = int(np.ceil(4 * C.largura * 2 * args.N ** 3)) + 1
    texto_json, texto_csv = exportar_labirinto(spec, sample_grid(C, radial, args.angular, N=args.N))
    escrever(os.path.join(args.saida, f"labirinto_N{args.N}.json"), texto_json)
    escrever(os.path.join(args.saida, f"pertinencia_N{args.N}.csv"), texto_csv)
    _imprimir({"status": "sucesso", "N": spec.N, "bandas": len(spec.bands), "abertura": spec.abertura})
    return SAIDA_OK


def cmd_distance(args) -> int:
    triple = _carregar_tripla(args.tripla)
    grade = sample_grid(triple.carrier, args.radial, args.angular)
    grafo = metric_graph(grade, induced_metric(triple, grade))
    origem = grade.no_mais_proximo(complex(*args.origem))
    resumo = {"origem": origem, "distancia_fronteira": distance_to_boundary(grafo, origem)}
    if args.saida:
        escrever(os.path.join(args.saida, "distancias.csv"), exportar_distancias(grade, distance_field(grafo, origem)))
        _, caminho = caminho_mais_curto(grafo, [origem], grade.fronteira())
        escrever(os.path.join(args.saida, "caminho.csv"), exportar_caminho(grade, caminho))
    _imprimir({"status": "sucesso", **resumo})
    return SAIDA_OK


def cmd_export(args) -> int:
    resumo = {}
    if args.tripla:
        triple = _carregar_tripla(args.tripla)
        grade = sample_grid(triple.carrier, args.radial, args.angular)
        base = complex(*args.base) if args.base else ponto_base(triple.carrier)
        escrever(args.malha, export_mesh(integrate_immersion(triple, base, grade)))
        resumo["malha"] = args.malha
    if args.relatorios:
        with open(args.relatorios, encoding="utf-8") as f:
            linhas = [json.loads(l) for l in f if l.strip()]
        campos = StageReport.__dataclass_fields__
        relatorios = [StageReport(**{k: v for k, v in l.items() if k in campos}) for l in linhas]
        escrever(args.csv, export_reports(relatorios)[0])
        resumo["csv"] = args.csv
    _imprimir({"status": "sucesso", **resumo})
    return SAIDA_OK


def criar_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Construção numérica de superfícies mínimas completas")
    sub = parser.add_subparsers(dest="comando", required=True)

    p = sub.add_parser("construct", help="recursão de exaustão com h prescrita")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("nonvanishing", help="recursão com φ3 sem zeros")
    p.add_argument("--config", required=True)
    p.add_argument("--compor", action="store_true", help="alimenta h = Re∫φ3 final na exaustão")
    p.set_defaults(func=cmd_nonvanishing)

    p = sub.add_parser("stage", help="um estágio de completude V1 -> V2")
    p.add_argument("--config", required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.set_defaults(func=cmd_stage)

    p = sub.add_parser("verify", help="isotropia, períodos, fluxo e cota da métrica de uma tripla")
    p.add_argument("--tripla", required=True)
    p.add_argument("--radial", type=int, default=64)
    p.add_argument("--angular", type=int, default=256)
    p.add_argument("--labirinto", type=float, nargs=3, metavar=("r", "R", "N"))
    p.add_argument("--M", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("labyrinth", help="emite o labirinto e a pertinência dos nós")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--angular", type=int, default=CONSTRUCAO["grade_angular"])
    p.add_argument("--saida", default=".")
    p.set_defaults(func=cmd_labyrinth)

    p = sub.add_parser("distance", help="distância intrínseca a partir de um ponto")
    p.add_argument("--tripla", required=True)
    p.add_argument("--origem", type=float, nargs=2, default=(0.0, 0.0))
    p.add_argument("--radial", type=int, default=128)
    p.add_argument("--angular", type=int, default=128)
    p.add_argument("--saida")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("export", help="malha OBJ de uma tripla e CSV de relatórios JSON-lines")
    p.add_argument("--tripla")
    p.add_argument("--malha", default="superficie.obj")
    p.add_argument("--base", type=float, nargs=2)
    p.add_argument("--radial", type=int, default=CONSTRUCAO["grade_radial"])
    p.add_argument("--angular", type=int, default=CONSTRUCAO["grade_angular"])
    p.add_argument("--relatorios")
    p.add_argument("--csv", default="relatorios.csv")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = criar_parser().parse_args(argv)
    logger.info("Iniciando subcomando", comando=args.comando)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as e:
        logger.error("Erro de configuração", comando=args.comando, error=str(e))
        _imprimir({"status": "erro", "erro": str(e)})
        return SAIDA_USO
    except SuperficieMinimaError as e:
        logger.error("Verificação falhou", comando=args.comando, error=str(e), **e.contexto())
        _imprimir({"status": "falha", "erro": str(e), **e.contexto()})
        return SAIDA_FALHA


if __name__ == "__main__":
    sys.exit(main())
