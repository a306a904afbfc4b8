package shop;

import java.io.IOException;
import java.io.PrintWriter;
import javax.naming.InitialContext;
import javax.naming.NamingException;
import javax.servlet.ServletException;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

public class CartServlet extends HttpServlet {

    private CartBean cart;

    public void init() throws ServletException {
        try {
            InitialContext ctx = new InitialContext();
            cart = (CartBean) ctx.lookup("java:comp/env/ejb/Cart");
        } catch (NamingException e) {
            throw new ServletException(e);
        }
    }

    protected void doGet(HttpServletRequest req, HttpServletResponse resp) throws ServletException, IOException {
        PrintWriter out = resp.getWriter();
        out.println("<p>" + cart.count() + " items</p>");
        out.println("<a href=\"../checkout.jsp\">Checkout</a>");
    }
}
