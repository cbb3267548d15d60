import logging
import sys

import click
from dotenv import load_dotenv

from config import RunConfig
from controllers.run_controller import EXIT_CONFIG, RunController, dumps
from models.errors import ConfigError

# Carregar variaveis de ambiente
load_dotenv()


def _emit(payload, code):
    """Imprime o payload JSON no stdout e sai com o codigo do comando"""
    click.echo(dumps(payload))
    sys.exit(code)


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Arquivo de configuração (chaves secao.chave)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True,
              help="Diretorio dos artefatos")
@click.option("--seed", type=int, default=None, help="Semente da amostragem das constantes H1")
@click.option("--threads", type=int, default=1, show_default=True, help="Trabalhadores do bench")
@click.option("--profile", type=click.Choice(["default", "quick", "reference"]), default=None,
              help="Perfil de configuração (padrão: KAMTORUS_PROFILE ou default)")
@click.pass_context
def cli(ctx, config_path, out_dir, seed, threads, profile):
    """Solver e certificador de toros invariantes KAM"""
    try:
        run_config = RunConfig.load(config_path, profile)
    except ConfigError as e:
        logging.basicConfig(stream=sys.stderr, level=logging.INFO, force=True)
        _emit({"success": False, "error": f"Erro ao ler configuração: {str(e)}", "kind": "ConfigError"}, EXIT_CONFIG)

    level = getattr(logging, run_config["log.level"].upper(), logging.INFO)
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
        force=True,
    )
    ctx.obj = RunController(run_config, out_dir, threads, seed)


@cli.command()
@click.pass_obj
def solve(controller):
    """Resolve o toro pelo metodo de Newton"""
    _emit(*controller.cmd_solve())


@cli.command()
@click.option("--torus", "torus_path", type=click.Path(dir_okay=False), default=None,
              help="Artefato do toro (.fmd ou .csv); sem ele o toro é resolvido antes")
@click.pass_obj
def certify(controller, torus_path):
    """Verifica a condição KAM pra um toro"""
    _emit(*controller.cmd_certify(torus_path))


@cli.command()
@click.option("--torus", "torus_path", type=click.Path(dir_okay=False), default=None,
              help="Artefato do toro (.fmd ou .csv); sem ele o toro é resolvido antes")
@click.pass_obj
def lift(controller, torus_path):
    """Levanta o toro pelo fluxo do momento"""
    _emit(*controller.cmd_lift(torus_path))


@cli.command()
@click.pass_obj
def bench(controller):
    """Compara os metodos classico e modificado e varre delta"""
    _emit(*controller.cmd_bench())


@cli.command()
@click.pass_obj
def constants(controller):
    """Imprime o livro-razão das constantes"""
    _emit(*controller.cmd_constants())


if __name__ == "__main__":
    cli()
